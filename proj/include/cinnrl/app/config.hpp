#pragma once

#include "cinnrl/cinn/blocks.hpp"
#include "cinnrl/cinn/train.hpp"
#include "cinnrl/error.hpp"
#include "cinnrl/glucosim/patient.hpp"
#include "cinnrl/introrl/env.hpp"
#include "cinnrl/introrl/sac.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cinnrl::app {

/// Bad flags, unknown config keys or missing required inputs (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Everything a command needs. Parsed from `key = value` lines; `#` starts a
/// comment. Unknown keys are rejected.
struct ExperimentConfig {
  glucosim::PatientKind model = glucosim::PatientKind::ode;
  /// Causal graph JSON; empty selects the model's built-in graph.
  std::filesystem::path dag;
  /// Directory holding train.csv and test_k.csv; empty regenerates the data.
  std::filesystem::path data;
  std::vector<int> policies{0, 1, 2, 3, 4, 5, 6, 7, 8};
  int n_traj = 10;
  int steps = 288;
  double initial_spread = 20.0;
  double dose_jitter = 0.05;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;

  cinn::TrainConfig train;
  cinn::BlockOptions block;
  /// Also train the masked-MLP baseline in `pretrain`.
  bool baseline = false;
  std::vector<num::Index> mlp_hidden{64, 64};

  /// Seeds per variant in `ablate`.
  int ablate_seeds = 3;
  int ablate_orders = 5;
  std::vector<num::Index> ablate_widths{16, 32, 64, 128};

  introrl::RlConfig rl;
  introrl::EnvConfig env;
  int eval_episodes = 5;

  /// Applies one key; throws UsageError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::uint64_t require_seed() const;
  /// Canonical `key = value` text of every setting.
  std::string to_text() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cinnrl::app
