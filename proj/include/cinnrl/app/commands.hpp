#pragma once

#include "cinnrl/app/config.hpp"
#include "cinnrl/causal/plan.hpp"
#include "cinnrl/cinn/train.hpp"
#include "cinnrl/glucosim/dataset.hpp"
#include "cinnrl/introrl/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cinnrl::app {

glucosim::PatientModel make_patient(const ExperimentConfig& cfg);
/// The graph at cfg.dag, or the patient's built-in graph.
causal::CausalDag make_dag(const ExperimentConfig& cfg, const glucosim::PatientModel& patient);

/// Training data (policy 0), a held-out IID set from the same policy and
/// one test set per remaining policy id.
struct DataBundle {
  glucosim::Dataset train;
  glucosim::Dataset iid;
  std::vector<glucosim::Dataset> tests;

  /// [iid, tests...] as transitions, the order used for curves.
  std::vector<cinn::Transitions> evaluation_sets() const;
};

glucosim::Dataset generate_policy(const ExperimentConfig& cfg, const glucosim::PatientModel& patient,
                                  int policy, const std::string& stream);
/// Reads cfg.data when set (test_0 is regenerated unless present), else
/// generates everything from the seed.
DataBundle make_data(const ExperimentConfig& cfg, const glucosim::PatientModel& patient);

cinn::CinnModel build_cinn(const causal::BlockPlan& plan, const cinn::BlockOptions& options,
                           const glucosim::Dataset& train, std::uint64_t seed);

/// Final-epoch summary of a bidirectional run. `ood` averages test sets 1..K.
struct FitSummary {
  cinn::Losses train;
  cinn::Losses iid;
  cinn::Losses ood;
  std::vector<cinn::Losses> per_test;
};
FitSummary summarize(const std::vector<cinn::EpochRecord>& history);

struct AblationRow {
  std::string variant;
  int seed = 0;
  bool reference = false;
  std::string layering;
  FitSummary fit;
  std::vector<cinn::EpochRecord> history;
};

/// Orders I..V (I is the DAG order, the rest seeded shuffles) or hidden
/// widths, each trained cfg.ablate_seeds times.
std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, const std::string& axis, std::ostream& log);

struct RlRun {
  introrl::RlResult train;
  introrl::GlycemicMetrics eval;
  std::vector<introrl::TraceRow> eval_trace;
  /// Mean cumulative reward over the last (up to) 20 training episodes.
  double final_mean_reward = 0.0;
  nlohmann::json agent;
};

/// Policy, critics, temperature and observation encoder as JSON.
nlohmann::json agent_to_json(const introrl::SacAgent& agent, const introrl::ObsEncoder& encoder);

/// Trains one agent and evaluates its deterministic policy.
RlRun run_rl(const ExperimentConfig& cfg, const cinn::CinnModel* model, std::ostream& log);

void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log);
void cmd_pretrain(const ExperimentConfig& cfg, std::ostream& log);
void cmd_ablate(const ExperimentConfig& cfg, const std::string& axis, std::ostream& log);
/// `cinn_path` is required for sac_cinn and sac_icm.
void cmd_train_rl(const ExperimentConfig& cfg, const std::filesystem::path& cinn_path, std::ostream& log);
/// Writes summary.csv and summary.txt into `out` (when set) and prints the
/// text table to `table`. Directories without a manifest are skipped.
void cmd_report(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out,
                std::ostream& log, std::ostream& table);

/// "epoch,mse" rows for one split and direction.
std::string curve_csv(const std::vector<cinn::EpochRecord>& history, int split, bool backward);

}  // namespace cinnrl::app
