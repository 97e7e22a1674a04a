#include "cinnrl/glucosim/patient.hpp"

#include "cinnrl/error.hpp"

#include <algorithm>
#include <cmath>

namespace cinnrl::glucosim {

using namespace slot;

const char* to_string(PatientKind kind) {
  return kind == PatientKind::toy_scm ? "toy_scm" : "ode";
}

PatientKind parse_patient_kind(const std::string& text) {
  if (text == "toy_scm" || text == "toy") return PatientKind::toy_scm;
  if (text == "ode") return PatientKind::ode;
  throw ParseError("unknown patient model '" + text + "' (expected toy_scm or ode)");
}

PatientModel PatientModel::toy(ToyParams params, double dt) {
  PatientModel m(PatientKind::toy_scm, dt);
  m.toy_ = params;
  return m;
}

PatientModel PatientModel::ode(OdeParams params, double dt) {
  if (params.substeps < 1) throw Error("ode model needs at least one substep");
  PatientModel m(PatientKind::ode, dt);
  m.ode_ = params;
  return m;
}

Vector PatientModel::ode_rhs(const Vector& x, double u, double d) const {
  const OdeParams& p = ode_;
  const double vi = p.vi_per_kg * p.bw;
  const double vg = p.vg_per_kg * p.bw;
  const double egp0 = p.egp0_per_kg * p.bw;
  const double f01 = p.f01_per_kg * p.bw;
  const double q1 = std::max(x(Q1), 0.0);
  const double q2 = std::max(x(Q2), 0.0);
  const double g = q1 / vg;
  const double f01c = g >= 4.5 ? f01 : f01 * g / 4.5;
  const double fr = g >= 9.0 ? 0.003 * (g - 9.0) * vg : 0.0;
  const double ui = x(S2) / p.tmax_i;
  const double ug = x(D2) / p.tmax_g;

  Vector dx(kOdeDim);
  dx(C) = p.kint * (18.0 * g - x(C));
  dx(S1) = u - x(S1) / p.tmax_i;
  dx(S2) = (x(S1) - x(S2)) / p.tmax_i;
  dx(I) = ui / vi - p.ke * x(I);
  dx(X1) = -p.ka1 * x(X1) + p.sit * p.ka1 * x(I);
  dx(X2) = -p.ka2 * x(X2) + p.sid * p.ka2 * x(I);
  dx(X3) = -p.ka3 * x(X3) + p.sie * p.ka3 * x(I);
  dx(Q1) = -f01c - x(X1) * q1 + p.k12 * q2 - fr + ug + egp0 * std::max(0.0, 1.0 - x(X3));
  dx(Q2) = x(X1) * q1 - (p.k12 + x(X2)) * q2;
  dx(D1) = p.ag * d - x(D1) / p.tmax_g;
  dx(D2) = (x(D1) - x(D2)) / p.tmax_g;
  dx(A1) = (x(S1) + x(S2) - x(A1)) / p.filter_tau;
  dx(A2) = (x(D1) + x(D2) - x(A2)) / p.filter_tau;
  return dx;
}

Vector PatientModel::step(const Vector& s, const Vector& a, bool* clamped) const {
  if (s.size() != state_dim() || a.size() != 2) {
    throw ShapeError("PatientModel::step: expected state " + std::to_string(state_dim()) +
                     " and action 2, got " + std::to_string(s.size()) + " and " + std::to_string(a.size()));
  }
  if (!s.allFinite() || !a.allFinite()) throw NumericError("PatientModel::step: non-finite input");
  bool hit = false;
  Vector next;
  if (kind_ == PatientKind::toy_scm) {
    const ToyParams& p = toy_;
    next.resize(6);
    next(0) = p.alpha[0] * s(0) + p.beta1 * a(0) + p.gamma * s(1);
    next(1) = p.alpha[1] * s(1) + p.beta2 * a(1);
    next(2) = p.alpha[2] * s(2) + p.c31 * next(0) + p.c32 * next(1);
    next(5) = p.alpha[5] * s(5) + p.c61 * next(0) + p.c62 * next(1);
    next(4) = p.alpha[4] * s(4) + p.c53 * next(2) + p.c56 * next(5);
    next(3) = p.alpha[3] * s(3) + p.c45 * next(4);
    const double bg = glucose(next);
    hit = bg <= kMinGlucose || bg >= kMaxGlucose;
  } else {
    const double u = a(0) * 1000.0 / dt_;
    const double d = a(1) * 1000.0 / 180.0 / dt_;
    const double h = dt_ / ode_.substeps;
    next = s;
    for (int k = 0; k < ode_.substeps; ++k) {
      const Vector k1 = ode_rhs(next, u, d);
      const Vector k2 = ode_rhs(next + 0.5 * h * k1, u, d);
      const Vector k3 = ode_rhs(next + 0.5 * h * k2, u, d);
      const Vector k4 = ode_rhs(next + h * k3, u, d);
      next += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    next(Q1) = std::max(next(Q1), 0.0);
    next(Q2) = std::max(next(Q2), 0.0);
    if (next(C) < kMinGlucose || next(C) > kMaxGlucose) {
      next(C) = std::clamp(next(C), kMinGlucose, kMaxGlucose);
      hit = true;
    }
  }
  if (!next.allFinite()) throw NumericError("PatientModel::step: state became non-finite");
  if (clamped) *clamped = hit;
  return next;
}

double PatientModel::glucose(const Vector& s) const {
  return kind_ == PatientKind::toy_scm ? toy_.glucose_offset + s(0) : s(C);
}

Vector PatientModel::resting_state(double basal) const {
  if (kind_ == PatientKind::toy_scm) {
    // The system is a stable linear map; iterate to its fixed point.
    Vector s = Vector::Zero(6);
    const Vector a = Vector::Map(std::array<double, 2>{basal, 0.0}.data(), 2);
    for (int i = 0; i < 100000; ++i) {
      Vector next = step(s, a);
      const double change = (next - s).cwiseAbs().maxCoeff();
      s = std::move(next);
      if (change < 1e-13) break;
    }
    return s;
  }
  const OdeParams& p = ode_;
  const double u = basal * 1000.0 / dt_;
  const double vi = p.vi_per_kg * p.bw;
  const double vg = p.vg_per_kg * p.bw;
  Vector x = Vector::Zero(kOdeDim);
  x(S1) = u * p.tmax_i;
  x(S2) = u * p.tmax_i;
  x(I) = u / (vi * p.ke);
  x(X1) = p.sit * x(I);
  x(X2) = p.sid * x(I);
  x(X3) = p.sie * x(I);
  x(A1) = x(S1) + x(S2);
  // dQ1/dt is decreasing in Q1 once Q2 is at its own equilibrium.
  auto balance = [&](double q1) {
    Vector y = x;
    y(Q1) = q1;
    y(Q2) = x(X1) * q1 / (p.k12 + x(X2));
    return ode_rhs(y, u, 0.0)(Q1);
  };
  double lo = 0.0;
  double hi = 2.0 * kMaxGlucose / 18.0 * vg;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (balance(mid) > 0.0 ? lo : hi) = mid;
  }
  x(Q1) = 0.5 * (lo + hi);
  x(Q2) = x(X1) * x(Q1) / (p.k12 + x(X2));
  x(C) = 18.0 * x(Q1) / vg;
  return x;
}

Vector PatientModel::with_glucose(const Vector& s, double bg) const {
  Vector out = s;
  if (kind_ == PatientKind::toy_scm) {
    out(0) = bg - toy_.glucose_offset;
    return out;
  }
  const double vg = ode_.vg_per_kg * ode_.bw;
  const double ratio = (bg / 18.0 * vg) / std::max(s(Q1), 1e-12);
  out(Q1) *= ratio;
  out(Q2) *= ratio;
  out(C) = bg;
  return out;
}

double PatientModel::basal_for(double bg) const {
  if (kind_ == PatientKind::toy_scm) {
    return (bg - toy_.glucose_offset) * (1.0 - toy_.alpha[0]) / toy_.beta1;
  }
  double lo = 0.0;
  double hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (glucose(resting_state(mid)) > bg ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Therapy PatientModel::nominal_therapy() const {
  if (kind_ == PatientKind::toy_scm) {
    return {.basal = basal_for(120.0), .icr = 2.0, .correction = 0.1, .target = 140.0, .max_insulin = 60.0};
  }
  return {.basal = basal_for(120.0), .icr = 10.0, .correction = 0.002, .target = 140.0, .max_insulin = 15.0};
}

causal::CausalDag PatientModel::dag() const {
  return kind_ == PatientKind::toy_scm ? toy_dag() : ode_dag();
}

namespace {

causal::CausalDag build_dag(const std::vector<std::string>& states,
                            const std::vector<std::string>& actions,
                            const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<causal::DagNode> nodes;
  for (std::size_t i = 0; i < states.size(); ++i)
    nodes.push_back({states[i], causal::NodeKind::state, static_cast<int>(i)});
  for (std::size_t i = 0; i < actions.size(); ++i)
    nodes.push_back({actions[i], causal::NodeKind::action, static_cast<int>(i)});
  for (std::size_t i = 0; i < states.size(); ++i)
    nodes.push_back({states[i] + "'", causal::NodeKind::next_state, static_cast<int>(i)});
  return causal::CausalDag(std::move(nodes), edges);
}

}  // namespace

causal::CausalDag toy_dag() {
  return build_dag({"s1", "s2", "s3", "s4", "s5", "s6"}, {"a1", "a2"},
                   {{"s1", "a1"},
                    {"s1", "s1'"}, {"s2", "s1'"}, {"a1", "s1'"},
                    {"s2", "s2'"}, {"a2", "s2'"},
                    {"s3", "s3'"}, {"s1'", "s3'"}, {"s2'", "s3'"},
                    {"s4", "s4'"}, {"s5'", "s4'"},
                    {"s5", "s5'"}, {"s3'", "s5'"}, {"s6'", "s5'"},
                    {"s6", "s6'"}, {"s1'", "s6'"}, {"s2'", "s6'"}});
}

causal::CausalDag ode_dag() {
  return build_dag({"C", "S1", "S2", "I", "x1", "x2", "x3", "Q1", "Q2", "D1", "D2", "A1", "A2"},
                   {"insulin", "carbs"},
                   {{"C", "insulin"},
                    {"S1", "S1'"}, {"insulin", "S1'"},
                    {"D1", "D1'"}, {"carbs", "D1'"},
                    {"S2", "S2'"}, {"S1'", "S2'"},
                    {"D2", "D2'"}, {"D1'", "D2'"},
                    {"A1", "A1'"}, {"S2", "A1'"}, {"S1'", "A1'"},
                    {"A2", "A2'"}, {"D2", "A2'"}, {"D1'", "A2'"},
                    {"I", "I'"}, {"S2'", "I'"},
                    {"x1", "x1'"}, {"I'", "x1'"},
                    {"x2", "x2'"}, {"I'", "x2'"},
                    {"x3", "x3'"}, {"I'", "x3'"},
                    {"Q1", "Q1'"}, {"Q2", "Q1'"}, {"D2'", "Q1'"}, {"x1'", "Q1'"}, {"x3'", "Q1'"},
                    {"Q2", "Q2'"}, {"Q1'", "Q2'"}, {"x2'", "Q2'"},
                    {"C", "C'"}, {"Q1'", "C'"}});
}

}  // namespace cinnrl::glucosim
