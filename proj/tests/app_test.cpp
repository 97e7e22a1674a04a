#include "cinnrl/app/commands.hpp"
#include "cinnrl/app/manifest.hpp"
#include "cinnrl/cinn/checkpoint.hpp"
#include "cinnrl/numkit/digest.hpp"
#include "cinnrl/numkit/text.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace cinnrl;
using namespace cinnrl::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cinnrl_app_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig cfg = parse_config(R"(
seed = 5
n_traj = 1
steps = 24
cinn.epochs = 3
cinn.hidden = 4
cinn.batch = 8
)");
  cfg.out = out;
  return cfg;
}

}  // namespace

TEST_CASE("config text parses, rejects unknown keys and round-trips") {
  const ExperimentConfig cfg = parse_config("seed = 3  # comment\nrl.variant = sac_cinn\ncinn.hidden = 32\n\n");
  CHECK(cfg.seed == 3u);
  CHECK(cfg.rl.variant == introrl::Variant::sac_cinn);
  CHECK(cfg.block.hidden == 32);
  CHECK(parse_config(cfg.to_text()).to_text() == cfg.to_text());
  CHECK_THROWS_AS(parse_config("no_such_key = 1"), UsageError);
  CHECK_THROWS_AS(parse_config("seed"), UsageError);
  CHECK_THROWS_AS(parse_config("n_traj = many"), UsageError);
  CHECK_THROWS_AS(ExperimentConfig{}.require_seed(), UsageError);
  CHECK_THROWS_AS(load_config("/nonexistent/cinnrl.conf"), UsageError);
}

TEST_CASE("gen-data writes nine deterministic files") {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  std::ostringstream log;
  cmd_gen_data(tiny(a), log);
  cmd_gen_data(tiny(b), log);
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++csvs;
    CHECK(line_count(e.path()) == 1 + 24);
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  CHECK(csvs == 9);
  CHECK(fs::exists(a / "train.csv"));
  CHECK(fs::exists(a / "test_8.csv"));
  const RunManifest ma = read_manifest(a), mb = read_manifest(b);
  for (const auto& [name, sha] : ma.files)
    if (name.ends_with(".csv")) CHECK(sha == mb.files.at(name));
  CHECK(ma.files.at("train.csv") == num::sha256_hex(slurp(a / "train.csv")));
  CHECK(ma.command == "gen-data");
}

TEST_CASE("pretrain writes twenty curves whose last rows match the checkpoint") {
  const fs::path data = scratch("pre_data"), out = scratch("pre_out");
  std::ostringstream log;
  cmd_gen_data(tiny(data), log);
  ExperimentConfig cfg = tiny(out);
  cfg.data = data;
  cmd_pretrain(cfg, log);

  int curves = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string name = e.path().filename().string();
    if (name.starts_with("forward_") || name.starts_with("backward_")) ++curves;
  }
  CHECK(curves == 20);

  const auto rows = lines(out / "backward_test_3.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "epoch,mse");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].starts_with(std::to_string(i) + ","));

  const cinn::CinnModel model = cinn::load_model(out / "cinn.json");
  const auto test3 = glucosim::read_csv(data / "test_3.csv");
  const cinn::Losses l = cinn::loss_bidirectional(model, test3.data);
  const auto field = [](const std::string& row) { return num::parse_double(row.substr(row.find(',') + 1)); };
  CHECK(field(rows.back()) == doctest::Approx(l.backward).epsilon(1e-12));
  CHECK(field(lines(out / "forward_test_3.csv").back()) == doctest::Approx(l.forward).epsilon(1e-12));
  const auto train = glucosim::read_csv(data / "train.csv");
  CHECK(field(lines(out / "forward_train.csv").back()) ==
        doctest::Approx(cinn::loss_bidirectional(model, train.data).forward).epsilon(1e-12));
  CHECK(read_manifest(out).metrics.at("plan") ==
        "[Symmetric(4, (2,2)), Symmetric(8, (4,4)), Asymmetric(15->13, known=7)]");
}

TEST_CASE("ablation produces five orders and four widths with the reference flagged") {
  ExperimentConfig cfg = tiny(scratch("ablate"));
  cfg.ablate_seeds = 1;
  cfg.train.epochs = 1;
  cfg.policies = {0, 8};
  std::ostringstream log;
  const auto orders = run_ablation(cfg, "order", log);
  REQUIRE(orders.size() == 5);
  CHECK(orders[0].variant == "Order-I");
  CHECK(orders[0].reference);
  CHECK(orders[4].variant == "Order-V");
  CHECK_FALSE(orders[1].reference);
  const auto widths = run_ablation(cfg, "width", log);
  REQUIRE(widths.size() == 4);
  CHECK(widths[0].variant == "h16");
  CHECK(widths[3].variant == "h128");
  CHECK_THROWS_AS(run_ablation(cfg, "depth", log), UsageError);
}

TEST_CASE("train-rl runs each variant and refuses model variants without a checkpoint") {
  const fs::path model_dir = scratch("rl_model");
  std::ostringstream log;
  ExperimentConfig pre = tiny(model_dir);
  pre.policies = {0};
  cmd_pretrain(pre, log);
  for (const char* variant : {"sac", "sac_icm", "sac_cinn"}) {
    ExperimentConfig cfg = tiny(scratch(std::string("rl_") + variant));
    cfg.set("rl.variant", variant);
    cfg.set("rl.steps", "60");
    cfg.set("rl.warmup", "20");
    cfg.set("rl.batch", "8");
    cfg.set("rl.hidden", "8");
    cfg.set("env.episode_steps", "30");
    cfg.set("eval.episodes", "1");
    const fs::path ckpt = std::string(variant) == "sac" ? fs::path() : model_dir / "cinn.json";
    cmd_train_rl(cfg, ckpt, log);
    CHECK(line_count(cfg.out / "rewards.csv") == 1 + 2);
    CHECK(line_count(cfg.out / "eval_trace.csv") == 1 + 30);
    const RunManifest m = read_manifest(cfg.out);
    CHECK(m.metrics.at("variant") == variant);
    if (ckpt.empty()) continue;
    CHECK(m.metrics.at("cinn_hash_before") == m.metrics.at("cinn_hash_after"));
    ExperimentConfig missing = cfg;
    CHECK_THROWS_AS(cmd_train_rl(missing, {}, log), UsageError);
  }
}

TEST_CASE("report of no runs is a header-only table") {
  const fs::path out = scratch("report_empty");
  std::ostringstream log, table;
  cmd_report({}, out, log, table);
  CHECK(line_count(out / "summary.csv") == 1);
  CHECK(lines(out / "summary.csv")[0].starts_with("run,command,variant"));
}

TEST_CASE("report orders runs by name, skips missing manifests and matches checksums") {
  const fs::path b = scratch("report_b"), a = scratch("report_a"), none = scratch("report_none");
  std::ostringstream log, table;
  cmd_gen_data(tiny(b), log);
  cmd_gen_data(tiny(a), log);
  fs::create_directories(none);
  const fs::path out = scratch("report_out");
  cmd_report({b, none, a}, out, log, table);
  const auto rows = lines(out / "summary.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].starts_with("cinnrl_app_test_report_a,"));
  CHECK(rows[2].starts_with("cinnrl_app_test_report_b,"));
  CHECK(log.str().find("skipping") != std::string::npos);

  // Recompute the digest from the files on disk.
  std::string listing;
  for (const auto& [name, sha] : read_manifest(a).files)
    if (name != "config.txt") listing += name + " " + num::sha256_hex(slurp(a / name)) + "\n";
  CHECK(rows[1].ends_with("," + num::sha256_hex(listing)));
}

TEST_CASE("commands need a seed and an output directory") {
  ExperimentConfig cfg = tiny(scratch("usage"));
  cfg.seed.reset();
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_gen_data(cfg, log), UsageError);
  cfg = tiny({});
  CHECK_THROWS_AS(cmd_gen_data(cfg, log), UsageError);
  cfg = tiny(scratch("usage"));
  cfg.dag = "/nonexistent/graph.json";
  CHECK_THROWS_AS(cmd_pretrain(cfg, log), UsageError);
}
