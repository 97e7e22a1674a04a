#include "cinnrl/app/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace cinnrl;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Key-value experiment config");
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--set", c.overrides, "Override one config key, KEY=VALUE (repeatable)");
}

app::ExperimentConfig resolve(const Common& c) {
  app::ExperimentConfig cfg = c.config.empty() ? app::ExperimentConfig{} : app::load_config(c.config);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw app::UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out = c.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Causal invertible networks and introspective SAC for glucose control"};
  cli.require_subcommand(1);

  Common gen_opts, pre_opts, abl_opts, rl_opts;
  auto* gen = cli.add_subcommand("gen-data", "Write train.csv and test_k.csv for the dose policies");
  add_common(gen, gen_opts);
  auto* pre = cli.add_subcommand("pretrain", "Train the CINN and write its checkpoint and loss curves");
  add_common(pre, pre_opts);
  auto* abl = cli.add_subcommand("ablate", "Order or width ablation of the CINN");
  add_common(abl, abl_opts);
  std::string axis;
  abl->add_option("--axis", axis, "order or width")->required()->check(CLI::IsMember({"order", "width"}));
  auto* rl = cli.add_subcommand("train-rl", "Train a SAC agent on the glucose environment");
  add_common(rl, rl_opts);
  std::string variant, cinn_path;
  rl->add_option("--variant", variant, "sac, sac_icm or sac_cinn")
      ->check(CLI::IsMember({"sac", "sac_icm", "sac_cinn"}));
  rl->add_option("--cinn", cinn_path, "Pretrained CINN checkpoint");
  auto* rep = cli.add_subcommand("report", "Summarize run directories");
  std::vector<std::string> runs;
  std::string report_out;
  rep->add_option("runs", runs, "Run directories");
  rep->add_option("--out", report_out, "Directory for summary.csv and summary.txt");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      app::cmd_gen_data(resolve(gen_opts), std::cerr);
    } else if (*pre) {
      app::cmd_pretrain(resolve(pre_opts), std::cerr);
    } else if (*abl) {
      app::cmd_ablate(resolve(abl_opts), axis, std::cerr);
    } else if (*rl) {
      app::ExperimentConfig cfg = resolve(rl_opts);
      if (!variant.empty()) cfg.rl.variant = introrl::parse_variant(variant);
      app::cmd_train_rl(cfg, cinn_path, std::cerr);
    } else if (*rep) {
      std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
      app::cmd_report(dirs, report_out, std::cerr, std::cout);
    }
  } catch (const app::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
