#pragma once

#include "cinnrl/causal/dag.hpp"
#include "cinnrl/numkit/var.hpp"

#include <array>
#include <string>

namespace cinnrl::glucosim {

using num::Index;
using num::Vector;

inline constexpr double kMinGlucose = 10.0;
inline constexpr double kMaxGlucose = 600.0;

enum class PatientKind { toy_scm, ode };

const char* to_string(PatientKind kind);
PatientKind parse_patient_kind(const std::string& text);

/// Six-state linear SCM. Slot 0 is the glucose deviation from
/// `glucose_offset`; slot 1 the gut carbohydrate store. Action 0 is insulin
/// (U/step), action 1 carbohydrate (g/step).
struct ToyParams {
  std::array<double, 6> alpha{0.9, 0.8, 0.7, 0.6, 0.5, 0.75};
  double beta1 = -0.5;  // insulin -> s'1
  double beta2 = 0.8;   // carbs -> s'2
  double gamma = 0.1;   // s2 -> s'1
  double c31 = 0.3;
  double c32 = 0.2;
  double c61 = 0.2;
  double c62 = -0.1;
  double c53 = 0.4;
  double c56 = 0.2;
  double c45 = 0.3;
  double glucose_offset = 170.0;
};

/// Hovorka-style glucose-insulin model. Units: insulin mU, glucose mmol,
/// time min; BW in kg.
struct OdeParams {
  double bw = 70.0;
  double tmax_i = 55.0;
  double vi_per_kg = 0.12;
  double ke = 0.138;
  double ka1 = 0.006;
  double ka2 = 0.06;
  double ka3 = 0.03;
  double sit = 51.2e-4 * 0.3;
  double sid = 8.2e-4 * 0.3;
  double sie = 520e-4 * 0.3;
  double egp0_per_kg = 0.0161;
  double f01_per_kg = 0.0097;
  double k12 = 0.066;
  double vg_per_kg = 0.16;
  double ag = 0.8;
  double tmax_g = 40.0;
  double kint = 0.066;
  double filter_tau = 60.0;
  int substeps = 5;
};

/// Slot layout of the ODE state.
namespace slot {
enum : Index { C = 0, S1, S2, I, X1, X2, X3, Q1, Q2, D1, D2, A1, A2 };
}
inline constexpr Index kOdeDim = 13;

/// Basal-bolus rule: basal + carbs / icr + correction * max(0, BG - target),
/// all in insulin units per step.
struct Therapy {
  double basal = 0.0;
  double icr = 10.0;
  double correction = 0.0;
  double target = 140.0;
  double max_insulin = 0.0;
};

class PatientModel {
 public:
  static PatientModel toy(ToyParams params = {}, double dt = 5.0);
  static PatientModel ode(OdeParams params = {}, double dt = 5.0);

  PatientKind kind() const { return kind_; }
  double dt() const { return dt_; }
  Index state_dim() const { return kind_ == PatientKind::toy_scm ? Index{6} : kOdeDim; }
  const ToyParams& toy_params() const { return toy_; }
  const OdeParams& ode_params() const { return ode_; }

  /// One dt step. `clamped` is set when the glucose reading hit the
  /// simulator bounds.
  Vector step(const Vector& s, const Vector& a, bool* clamped = nullptr) const;
  /// Glucose reading in mg/dl.
  double glucose(const Vector& s) const;
  /// Steady state under constant basal insulin and no carbohydrate.
  Vector resting_state(double basal) const;
  /// Same state shifted so the glucose reading equals `bg`.
  Vector with_glucose(const Vector& s, double bg) const;
  /// Basal insulin (U/step) whose resting glucose is `bg`.
  double basal_for(double bg) const;
  Therapy nominal_therapy() const;
  causal::CausalDag dag() const;

 private:
  PatientModel(PatientKind kind, double dt) : kind_(kind), dt_(dt) {}
  Vector ode_rhs(const Vector& x, double u, double d) const;

  PatientKind kind_;
  double dt_;
  ToyParams toy_;
  OdeParams ode_;
};

causal::CausalDag toy_dag();
causal::CausalDag ode_dag();

}  // namespace cinnrl::glucosim
