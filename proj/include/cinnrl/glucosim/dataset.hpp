#pragma once

#include "cinnrl/cinn/transitions.hpp"
#include "cinnrl/glucosim/dosing.hpp"
#include "cinnrl/glucosim/patient.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cinnrl::glucosim {

struct GenConfig {
  int n_traj = 10;
  int steps = 288;
  std::uint64_t seed = 0;
  /// Standard deviation (mg/dl) of the starting glucose around 120.
  double initial_spread = 20.0;
  Therapy therapy;
  std::vector<MealEvent> meals = default_meals();
};

struct Dataset {
  int policy_id = 0;
  std::uint64_t seed = 0;
  double dt = 5.0;
  int steps = 0;
  std::vector<int> traj_id;
  std::vector<int> t;
  cinn::Transitions data;
  /// Steps whose glucose reading hit the simulator bounds.
  int clamp_events = 0;

  num::Index size() const { return data.size(); }
};

/// Trajectory k draws from its own stream derive_seed(cfg.seed, k), so the
/// result does not depend on generation order.
Dataset gen_dataset(const PatientModel& model, const DosePolicy& policy, const GenConfig& cfg);

/// Columns traj_id, t, s_0..s_{n-1}, insulin, carbs, s_next_0..s_next_{n-1}.
std::string to_csv(const Dataset& data);
void write_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path);

/// Closed-form action that moves the toy SCM from s to s_next on the
/// action-determined coordinates (slots 0 and 1).
Vector scm_counterfactual_oracle(const ToyParams& params, const Vector& s, const Vector& s_next);

/// Writes `text` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace cinnrl::glucosim
