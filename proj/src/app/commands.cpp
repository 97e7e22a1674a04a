#include "cinnrl/app/commands.hpp"

#include "cinnrl/app/manifest.hpp"
#include "cinnrl/causal/layering.hpp"
#include "cinnrl/cinn/baseline.hpp"
#include "cinnrl/cinn/checkpoint.hpp"
#include "cinnrl/numkit/text.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace cinnrl::app {

namespace fs = std::filesystem;
using num::derive_seed;
using num::format_double;

namespace {

const char* kRoman[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"};

fs::path prepare_out(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("an output directory is required (--out DIR)");
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) throw Error("cannot create output directory " + cfg.out.string());
  return cfg.out;
}

RunManifest begin_run(const std::string& command, const ExperimentConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config = cfg.to_text();
  m.started = utc_now();
  return m;
}

void put(const fs::path& dir, const std::string& name, const std::string& text, RunManifest& manifest) {
  if (const fs::path parent = (dir / name).parent_path(); !parent.empty()) fs::create_directories(parent);
  glucosim::write_file_atomic(dir / name, text);
  manifest.files[name] = "";
}

nlohmann::json losses_json(const cinn::Losses& l) { return {{"forward", l.forward}, {"backward", l.backward}}; }

std::string test_name(int k) { return "test_" + std::to_string(k); }

std::vector<int> test_policies(const ExperimentConfig& cfg) {
  std::vector<int> out;
  for (int p : cfg.policies) {
    if (p < 0 || p >= glucosim::kPolicyCount) throw UsageError("policy id " + std::to_string(p) + " out of range");
    if (p != 0) out.push_back(p);
  }
  return out;
}

}  // namespace

glucosim::PatientModel make_patient(const ExperimentConfig& cfg) {
  return cfg.model == glucosim::PatientKind::toy_scm ? glucosim::PatientModel::toy() : glucosim::PatientModel::ode();
}

causal::CausalDag make_dag(const ExperimentConfig& cfg, const glucosim::PatientModel& patient) {
  if (cfg.dag.empty()) return patient.dag();
  if (!fs::exists(cfg.dag)) throw UsageError("causal graph " + cfg.dag.string() + " does not exist");
  causal::CausalDag dag = causal::CausalDag::load(cfg.dag);
  if (dag.state_dim() != patient.state_dim() || dag.action_dim() != 2) {
    throw UsageError("causal graph " + cfg.dag.string() + " does not match the " +
                     glucosim::to_string(patient.kind()) + " patient");
  }
  return dag;
}

std::vector<cinn::Transitions> DataBundle::evaluation_sets() const {
  std::vector<cinn::Transitions> out{iid.data};
  for (const auto& d : tests) out.push_back(d.data);
  return out;
}

glucosim::Dataset generate_policy(const ExperimentConfig& cfg, const glucosim::PatientModel& patient, int policy,
                                  const std::string& stream) {
  glucosim::GenConfig gen;
  gen.n_traj = cfg.n_traj;
  gen.steps = cfg.steps;
  gen.seed = derive_seed(cfg.require_seed(), "data/" + stream);
  gen.initial_spread = cfg.initial_spread;
  gen.therapy = patient.nominal_therapy();
  gen.meals = cfg.env.meals;
  return glucosim::gen_dataset(patient, glucosim::dose_policy(policy, cfg.dose_jitter), gen);
}

DataBundle make_data(const ExperimentConfig& cfg, const glucosim::PatientModel& patient) {
  DataBundle out;
  const std::vector<int> tests = test_policies(cfg);
  if (cfg.data.empty()) {
    out.train = generate_policy(cfg, patient, 0, "train");
    for (int p : tests) out.tests.push_back(generate_policy(cfg, patient, p, test_name(p)));
  } else {
    if (!fs::is_directory(cfg.data)) throw UsageError("data directory " + cfg.data.string() + " does not exist");
    out.train = glucosim::read_csv(cfg.data / "train.csv");
    for (int p : tests) {
      out.tests.push_back(glucosim::read_csv(cfg.data / (test_name(p) + ".csv")));
      out.tests.back().policy_id = p;
    }
  }
  const fs::path iid = cfg.data / "test_0.csv";
  out.iid = !cfg.data.empty() && fs::exists(iid) ? glucosim::read_csv(iid) : generate_policy(cfg, patient, 0, test_name(0));
  if (out.train.data.state_dim() != patient.state_dim()) {
    throw UsageError("training data has " + std::to_string(out.train.data.state_dim()) + " state columns, the " +
                     glucosim::to_string(patient.kind()) + " patient has " + std::to_string(patient.state_dim()));
  }
  return out;
}

cinn::CinnModel build_cinn(const causal::BlockPlan& plan, const cinn::BlockOptions& options,
                           const glucosim::Dataset& train, std::uint64_t seed) {
  num::Rng rng(seed);
  cinn::CinnModel model = cinn::CinnModel::random(plan, options, rng);
  model.scaling = cinn::Scaling::fit(train.data);
  return model;
}

FitSummary summarize(const std::vector<cinn::EpochRecord>& history) {
  FitSummary s;
  if (history.empty()) return s;
  const cinn::EpochRecord& last = history.back();
  s.train = last.train;
  if (!last.test.empty()) s.iid = last.test.front();
  s.per_test.assign(last.test.begin() + (last.test.empty() ? 0 : 1), last.test.end());
  for (const cinn::Losses& l : s.per_test) {
    s.ood.forward += l.forward / static_cast<double>(s.per_test.size());
    s.ood.backward += l.backward / static_cast<double>(s.per_test.size());
  }
  return s;
}

std::string curve_csv(const std::vector<cinn::EpochRecord>& history, int split, bool backward) {
  std::string out = "epoch,mse\n";
  for (const cinn::EpochRecord& r : history) {
    const cinn::Losses& l = split < 0 ? r.train : r.test.at(static_cast<std::size_t>(split));
    out += std::to_string(r.epoch) + "," + format_double(backward ? l.backward : l.forward) + "\n";
  }
  return out;
}

namespace {

// Writes forward_/backward_ curves for train, test_0 and each OOD set.
void put_curves(const fs::path& dir, const std::string& prefix, const std::vector<cinn::EpochRecord>& history,
                const DataBundle& data, RunManifest& manifest) {
  for (const bool backward : {false, true}) {
    const std::string dirn = backward ? "backward_" : "forward_";
    put(dir, prefix + dirn + "train.csv", curve_csv(history, -1, backward), manifest);
    put(dir, prefix + dirn + "test_0.csv", curve_csv(history, 0, backward), manifest);
    for (std::size_t k = 0; k < data.tests.size(); ++k) {
      put(dir, prefix + dirn + test_name(data.tests[k].policy_id) + ".csv",
          curve_csv(history, static_cast<int>(k + 1), backward), manifest);
    }
  }
}

nlohmann::json fit_json(const FitSummary& s) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& l : s.per_test) per.push_back(losses_json(l));
  return {{"train", losses_json(s.train)}, {"iid", losses_json(s.iid)}, {"ood", losses_json(s.ood)}, {"per_test", per}};
}

void log_epoch(std::ostream& log, const std::string& tag, const cinn::EpochRecord& r, int epochs) {
  if (r.epoch == epochs || r.epoch % 20 == 0) {
    log << tag << " epoch " << r.epoch << " train forward " << r.train.forward << " backward " << r.train.backward
        << "\n";
  }
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.require_seed();
  const fs::path dir = prepare_out(cfg);
  RunManifest manifest = begin_run("gen-data", cfg);
  const glucosim::PatientModel patient = make_patient(cfg);
  int clamps = 0;
  const auto emit = [&](const glucosim::Dataset& d, const std::string& name) {
    put(dir, name, glucosim::to_csv(d), manifest);
    clamps += d.clamp_events;
    log << "wrote " << name << " (" << d.size() << " rows)\n";
  };
  emit(generate_policy(cfg, patient, 0, "train"), "train.csv");
  for (int p : test_policies(cfg)) emit(generate_policy(cfg, patient, p, test_name(p)), test_name(p) + ".csv");
  if (clamps > 0) log << "warning: " << clamps << " steps hit the simulator glucose bounds\n";
  put(dir, "config.txt", cfg.to_text(), manifest);
  manifest.metrics = {{"clamp_events", clamps}};
  write_manifest(dir, manifest);
}

void cmd_pretrain(const ExperimentConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = cfg.require_seed();
  const fs::path dir = prepare_out(cfg);
  RunManifest manifest = begin_run("pretrain", cfg);
  const glucosim::PatientModel patient = make_patient(cfg);
  const causal::CausalDag dag = make_dag(cfg, patient);
  const causal::BlockPlan plan = causal::plan_structure(causal::topo_layering(dag), dag);
  log << "plan " << causal::describe(plan) << "\n";
  const DataBundle data = make_data(cfg, patient);
  const auto sets = data.evaluation_sets();

  cinn::CinnModel model = build_cinn(plan, cfg.block, data.train, derive_seed(seed, "cinn"));
  cinn::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, "cinn/train");
  const auto history = cinn::train_bidirectional(model, data.train.data, sets, tc, [&](const cinn::EpochRecord& r) {
    log_epoch(log, "cinn", r, tc.epochs);
  });
  put_curves(dir, "", history, data, manifest);
  cinn::save_model(model, dir / "cinn.json");
  manifest.files["cinn.json"] = "";
  const FitSummary fit = summarize(history);
  manifest.metrics = {{"plan", causal::describe(plan)},
                      {"cinn", fit_json(fit)},
                      {"forward_mse", fit.ood.forward},
                      {"backward_mse", fit.ood.backward}};

  if (cfg.baseline) {
    num::Rng rng(derive_seed(seed, "mlp"));
    cinn::MaskedMlp mlp = cinn::MaskedMlp::random(patient.state_dim(), 2, cfg.mlp_hidden, rng);
    mlp.scaling = model.scaling;
    tc.seed = derive_seed(seed, "mlp/train");
    const auto mh = cinn::train_bidirectional(mlp, data.train.data, sets, tc, [&](const cinn::EpochRecord& r) {
      log_epoch(log, "mlp", r, tc.epochs);
    });
    put_curves(dir, "mlp/", mh, data, manifest);
    manifest.metrics["mlp"] = fit_json(summarize(mh));
  }
  put(dir, "config.txt", cfg.to_text(), manifest);
  write_manifest(dir, manifest);
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, const std::string& axis, std::ostream& log) {
  if (axis != "order" && axis != "width") throw UsageError("--axis must be 'order' or 'width', got '" + axis + "'");
  const std::uint64_t seed = cfg.require_seed();
  const glucosim::PatientModel patient = make_patient(cfg);
  const causal::CausalDag dag = make_dag(cfg, patient);
  const causal::Layering base = causal::topo_layering(dag);
  const DataBundle data = make_data(cfg, patient);
  const auto sets = data.evaluation_sets();

  struct Variant {
    std::string name;
    causal::Layering layering;
    cinn::BlockOptions options;
  };
  std::vector<Variant> variants;
  if (axis == "order") {
    const int n = std::clamp(cfg.ablate_orders, 1, 10);
    for (int v = 0; v < n; ++v) {
      const causal::Layering order =
          v == 0 ? base : causal::shuffle_order(base, derive_seed(seed, "order/" + std::to_string(v)));
      variants.push_back({std::string("Order-") + kRoman[v], order, cfg.block});
    }
  } else {
    for (num::Index h : cfg.ablate_widths) {
      cinn::BlockOptions o = cfg.block;
      o.hidden = h;
      variants.push_back({"h" + std::to_string(h), base, o});
    }
  }

  std::vector<AblationRow> rows;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const causal::BlockPlan plan = causal::plan_structure(variants[v].layering, dag);
    for (int s = 0; s < cfg.ablate_seeds; ++s) {
      AblationRow row;
      row.variant = variants[v].name;
      row.seed = s;
      row.reference = v == 0;
      row.layering = causal::describe(variants[v].layering);
      cinn::CinnModel model =
          build_cinn(plan, variants[v].options, data.train, derive_seed(seed, "ablate/" + std::to_string(s)));
      cinn::TrainConfig tc = cfg.train;
      tc.seed = derive_seed(seed, "ablate/train/" + std::to_string(s));
      row.history = cinn::train_bidirectional(model, data.train.data, sets, tc);
      row.fit = summarize(row.history);
      log << row.variant << " seed " << s << " backward OOD " << row.fit.ood.backward << "\n";
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void cmd_ablate(const ExperimentConfig& cfg, const std::string& axis, std::ostream& log) {
  const fs::path dir = prepare_out(cfg);
  RunManifest manifest = begin_run("ablate " + axis, cfg);
  const std::vector<AblationRow> rows = run_ablation(cfg, axis, log);

  std::string summary = "variant,seed,reference,layering,forward_iid,backward_iid,forward_ood,backward_ood\n";
  std::map<std::string, std::string> curves;
  std::vector<std::string> order;
  for (const AblationRow& r : rows) {
    summary += r.variant + "," + std::to_string(r.seed) + "," + (r.reference ? "1" : "0") + ",\"" + r.layering +
               "\"," + format_double(r.fit.iid.forward) + "," + format_double(r.fit.iid.backward) + "," +
               format_double(r.fit.ood.forward) + "," + format_double(r.fit.ood.backward) + "\n";
    auto [it, fresh] = curves.try_emplace(r.variant, "seed,epoch,split,forward,backward\n");
    if (fresh) order.push_back(r.variant);
    for (const cinn::EpochRecord& e : r.history) {
      const auto line = [&](const std::string& split, const cinn::Losses& l) {
        it->second += std::to_string(r.seed) + "," + std::to_string(e.epoch) + "," + split + "," +
                      format_double(l.forward) + "," + format_double(l.backward) + "\n";
      };
      line("train", e.train);
      for (std::size_t k = 0; k < e.test.size(); ++k) line("test_" + std::to_string(k), e.test[k]);
    }
  }
  put(dir, "ablation_" + axis + ".csv", summary, manifest);
  for (const std::string& v : order) put(dir, "curves_" + v + ".csv", curves[v], manifest);

  nlohmann::json means = nlohmann::json::object();
  for (const std::string& v : order) {
    double sum = 0.0;
    int n = 0;
    for (const AblationRow& r : rows)
      if (r.variant == v) sum += r.fit.ood.backward, ++n;
    means[v] = sum / n;
  }
  manifest.metrics = {{"axis", axis}, {"mean_backward_ood", means}};
  put(dir, "config.txt", cfg.to_text(), manifest);
  write_manifest(dir, manifest);
}

nlohmann::json agent_to_json(const introrl::SacAgent& agent, const introrl::ObsEncoder& encoder) {
  const auto row = [](const num::RowVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  const auto vec = [](const num::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"format", "cinnrl-agent"},
          {"version", 1},
          {"variant", introrl::to_string(agent.cfg.variant)},
          {"bounds", {{"low", vec(agent.policy.bounds().low)}, {"high", vec(agent.policy.bounds().high)}}},
          {"encoder",
           {{"mean", row(encoder.state.mean)},
            {"scale", row(encoder.state.scale)},
            {"meal_scale", encoder.meal_scale},
            {"steps_per_day", encoder.steps_per_day}}},
          {"policy", cinn::mlp_to_json(agent.policy.trunk())},
          {"q1", cinn::mlp_to_json(agent.q1)},
          {"q2", cinn::mlp_to_json(agent.q2)},
          {"log_alpha", agent.log_alpha.value(0, 0)}};
}

RlRun run_rl(const ExperimentConfig& cfg, const cinn::CinnModel* model, std::ostream& log) {
  const std::uint64_t seed = cfg.require_seed();
  const glucosim::PatientModel patient = make_patient(cfg);
  if (model && model->state_dim() != patient.state_dim()) {
    throw UsageError("the CINN has " + std::to_string(model->state_dim()) + " state slots, the patient has " +
                     std::to_string(patient.state_dim()));
  }
  introrl::RlConfig rc = cfg.rl;
  rc.seed = seed;
  const introrl::ObsEncoder encoder = introrl::ObsEncoder::fit(patient, cfg.env);
  num::Rng init(derive_seed(seed, "agent"));
  introrl::SacAgent agent(encoder.dim(), introrl::ActionBounds::from(cfg.env), rc, init);
  introrl::GlucoseEnv env(patient, cfg.env, derive_seed(seed, "env/train"));

  RlRun run;
  run.train = introrl::train_rl(agent, env, encoder, model, [&](const introrl::EpisodeRecord& e) {
    log << "episode " << e.episode << " reward " << e.cum_reward << " time in range " << e.time_in_range << "%\n";
    if (e.clamp_events > 0) log << "warning: " << e.clamp_events << " steps hit the simulator glucose bounds\n";
  });
  const auto& curve = run.train.curve;
  const std::size_t tail = std::min<std::size_t>(20, curve.size());
  for (std::size_t i = curve.size() - tail; i < curve.size(); ++i) run.final_mean_reward += curve[i].cum_reward / tail;

  introrl::GlucoseEnv eval_env(patient, cfg.env, derive_seed(seed, "env/eval"));
  run.eval = introrl::evaluate(agent.policy, eval_env, encoder, cfg.eval_episodes, &run.eval_trace);
  run.agent = agent_to_json(agent, encoder);
  return run;
}

namespace {

std::string trace_csv(const std::vector<introrl::TraceRow>& rows) {
  std::string out = "t,s_G,insulin,carbs\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t) + "," + format_double(r.glucose) + "," + format_double(r.insulin) + "," +
           format_double(r.carbs) + "\n";
  }
  return out;
}

}  // namespace

void cmd_train_rl(const ExperimentConfig& cfg, const fs::path& cinn_path, std::ostream& log) {
  cfg.require_seed();
  const bool needs_model = cfg.rl.variant != introrl::Variant::sac;
  if (needs_model && cinn_path.empty()) {
    throw UsageError(std::string(introrl::to_string(cfg.rl.variant)) + " needs a CINN checkpoint (--cinn PATH)");
  }
  if (!cinn_path.empty() && !fs::exists(cinn_path)) {
    throw UsageError("CINN checkpoint " + cinn_path.string() + " does not exist");
  }
  const fs::path dir = prepare_out(cfg);
  RunManifest manifest = begin_run("train-rl", cfg);
  std::optional<cinn::CinnModel> model;
  if (!cinn_path.empty()) {
    model = cinn::load_model(cinn_path);
    model->freeze();
  }
  const RlRun run = run_rl(cfg, model ? &*model : nullptr, log);

  std::string rewards = "episode,cum_reward\n";
  for (const auto& e : run.train.curve) rewards += std::to_string(e.episode) + "," + format_double(e.cum_reward) + "\n";
  put(dir, "rewards.csv", rewards, manifest);
  put(dir, "train_trace.csv", trace_csv(run.train.trace), manifest);
  put(dir, "eval_trace.csv", trace_csv(run.eval_trace), manifest);
  std::string eval = "metric,value\n";
  eval += "time_in_range," + format_double(run.eval.time_in_range) + "\n";
  eval += "hypo_events," + std::to_string(run.eval.hypo_events) + "\n";
  eval += "hyper_events," + std::to_string(run.eval.hyper_events) + "\n";
  eval += "mean_cum_reward," + format_double(run.eval.mean_return) + "\n";
  eval += "final_mean_train_reward," + format_double(run.final_mean_reward) + "\n";
  put(dir, "eval.csv", eval, manifest);
  put(dir, "agent.json", run.agent.dump(1) + "\n", manifest);
  put(dir, "config.txt", cfg.to_text(), manifest);
  if (run.train.clamp_events > 0) log << "warning: " << run.train.clamp_events << " clamped steps in training\n";

  manifest.metrics = {{"variant", introrl::to_string(cfg.rl.variant)},
                      {"time_in_range", run.eval.time_in_range},
                      {"hypo_events", run.eval.hypo_events},
                      {"hyper_events", run.eval.hyper_events},
                      {"mean_cum_reward", run.eval.mean_return},
                      {"final_mean_train_reward", run.final_mean_reward},
                      {"clamp_events", run.train.clamp_events},
                      {"cinn_hash_before", run.train.cinn_hash_before},
                      {"cinn_hash_after", run.train.cinn_hash_after}};
  write_manifest(dir, manifest);
}

namespace {

std::string metric(const nlohmann::json& m, const char* key) {
  if (!m.contains(key)) return "";
  const auto& v = m.at(key);
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return "";
}

}  // namespace

void cmd_report(const std::vector<fs::path>& runs, const fs::path& out, std::ostream& log, std::ostream& table) {
  static const std::vector<std::string> header{"run",           "command",     "variant",      "forward_mse",
                                               "backward_mse",  "time_in_range", "hypo_events", "hyper_events",
                                               "mean_cum_reward", "files_sha256"};
  std::vector<fs::path> sorted = runs;
  std::sort(sorted.begin(), sorted.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<std::vector<std::string>> rows;
  for (const fs::path& run : sorted) {
    RunManifest m;
    try {
      m = read_manifest(run);
    } catch (const Error& ex) {
      log << "warning: skipping " << run.string() << ": " << ex.what() << "\n";
      continue;
    }
    rows.push_back({run.filename().string(), m.command, metric(m.metrics, "variant"), metric(m.metrics, "forward_mse"),
                    metric(m.metrics, "backward_mse"), metric(m.metrics, "time_in_range"),
                    metric(m.metrics, "hypo_events"), metric(m.metrics, "hyper_events"),
                    metric(m.metrics, "mean_cum_reward"), files_digest(m)});
  }

  std::string csv;
  for (std::size_t j = 0; j < header.size(); ++j) (csv += j ? "," : "") += header[j];
  csv += "\n";
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) (csv += j ? "," : "") += r[j];
    csv += "\n";
  }

  std::vector<std::size_t> width(header.size() - 1);
  for (std::size_t j = 0; j < width.size(); ++j) {
    width[j] = header[j].size();
    for (const auto& r : rows) width[j] = std::max(width[j], r[j].size());
  }
  std::ostringstream text;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < width.size(); ++j) text << std::left << std::setw(static_cast<int>(width[j] + 2)) << cells[j];
    text << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  table << text.str();

  if (!out.empty()) {
    fs::create_directories(out);
    glucosim::write_file_atomic(out / "summary.csv", csv);
    glucosim::write_file_atomic(out / "summary.txt", text.str());
  }
}

}  // namespace cinnrl::app
