#include "cinnrl/app/config.hpp"

#include "cinnrl/numkit/text.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace cinnrl::app {

namespace {

using num::format_double;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("expected a boolean, got '" + v + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  for (std::string_view item : num::split(v, ',')) out.push_back(static_cast<T>(num::parse_int(trim(item))));
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) (out += i ? "," : "") += std::to_string(xs[i]);
  return out;
}

int to_int(const std::string& v) { return static_cast<int>(num::parse_int(v)); }

struct Key {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define CINNRL_INT(name, field) \
  {name, {[](ExperimentConfig& c, const std::string& v) { c.field = to_int(v); }, \
          [](const ExperimentConfig& c) { return std::to_string(c.field); }}}
#define CINNRL_LONG(name, field) \
  {name, {[](ExperimentConfig& c, const std::string& v) { c.field = num::parse_int(v); }, \
          [](const ExperimentConfig& c) { return std::to_string(c.field); }}}
#define CINNRL_REAL(name, field) \
  {name, {[](ExperimentConfig& c, const std::string& v) { c.field = num::parse_double(v); }, \
          [](const ExperimentConfig& c) { return format_double(c.field); }}}
#define CINNRL_BOOL(name, field) \
  {name, {[](ExperimentConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
          [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }}}
#define CINNRL_PATH(name, field) \
  {name, {[](ExperimentConfig& c, const std::string& v) { c.field = v; }, \
          [](const ExperimentConfig& c) { return c.field.string(); }}}
#define CINNRL_LIST(name, field, T) \
  {name, {[](ExperimentConfig& c, const std::string& v) { c.field = parse_list<T>(v); }, \
          [](const ExperimentConfig& c) { return join(c.field); }}}

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = {
      {"model", {[](ExperimentConfig& c, const std::string& v) { c.model = glucosim::parse_patient_kind(v); },
                 [](const ExperimentConfig& c) { return std::string(glucosim::to_string(c.model)); }}},
      {"seed", {[](ExperimentConfig& c, const std::string& v) {
                  if (v.empty()) c.seed.reset();
                  else c.seed = static_cast<std::uint64_t>(num::parse_int(v));
                },
                [](const ExperimentConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }}},
      CINNRL_PATH("dag", dag),
      CINNRL_PATH("data", data),
      CINNRL_PATH("out", out),
      CINNRL_LIST("policies", policies, int),
      CINNRL_INT("n_traj", n_traj),
      CINNRL_INT("steps", steps),
      CINNRL_REAL("initial_spread", initial_spread),
      CINNRL_REAL("dose_jitter", dose_jitter),
      CINNRL_REAL("cinn.lr", train.lr),
      CINNRL_REAL("cinn.final_lr_fraction", train.final_lr_fraction),
      CINNRL_INT("cinn.batch", train.batch),
      CINNRL_INT("cinn.epochs", train.epochs),
      CINNRL_LONG("cinn.hidden", block.hidden),
      CINNRL_INT("cinn.coupling_depth", block.coupling_depth),
      CINNRL_REAL("cinn.negative_slope", block.negative_slope),
      CINNRL_REAL("cinn.scale_clamp", block.scale_clamp),
      CINNRL_LONG("cinn.reflectors", block.reflectors),
      CINNRL_REAL("cinn.init_gain", block.init_gain),
      CINNRL_BOOL("baseline", baseline),
      CINNRL_LIST("mlp.hidden", mlp_hidden, num::Index),
      CINNRL_INT("ablate.seeds", ablate_seeds),
      CINNRL_INT("ablate.orders", ablate_orders),
      CINNRL_LIST("ablate.widths", ablate_widths, num::Index),
      {"rl.variant", {[](ExperimentConfig& c, const std::string& v) { c.rl.variant = introrl::parse_variant(v); },
                      [](const ExperimentConfig& c) { return std::string(introrl::to_string(c.rl.variant)); }}},
      CINNRL_REAL("rl.eta", rl.eta),
      CINNRL_REAL("rl.beta", rl.beta),
      CINNRL_REAL("rl.lambda", rl.lambda),
      CINNRL_REAL("rl.gamma", rl.gamma),
      CINNRL_REAL("rl.tau", rl.tau),
      CINNRL_REAL("rl.lr", rl.lr),
      CINNRL_LONG("rl.batch", rl.batch),
      CINNRL_LONG("rl.hidden", rl.hidden),
      CINNRL_LONG("rl.warmup", rl.warmup),
      CINNRL_LONG("rl.steps", rl.steps),
      CINNRL_LONG("rl.replay_capacity", rl.replay_capacity),
      CINNRL_REAL("rl.init_alpha", rl.init_alpha),
      CINNRL_REAL("rl.target_entropy", rl.target_entropy),
      CINNRL_REAL("rl.reward_scale", rl.reward_scale),
      CINNRL_BOOL("rl.clamped_target", rl.clamped_target),
      CINNRL_BOOL("rl.introspection", rl.introspection),
      CINNRL_INT("env.episode_steps", env.episode_steps),
      CINNRL_REAL("env.insulin_max", env.insulin_max),
      CINNRL_REAL("env.rescue_max", env.rescue_max),
      CINNRL_REAL("env.initial_spread", env.initial_spread),
      CINNRL_INT("eval.episodes", eval_episodes),
  };
  return table;
}

#undef CINNRL_INT
#undef CINNRL_LONG
#undef CINNRL_REAL
#undef CINNRL_BOOL
#undef CINNRL_PATH
#undef CINNRL_LIST

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto it = keys().find(key);
  if (it == keys().end()) throw UsageError("unknown config key '" + key + "'");
  try {
    it->second.set(*this, value);
  } catch (const Error& ex) {
    throw UsageError("config key '" + key + "': " + ex.what());
  }
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw UsageError("a seed is required (--seed N or 'seed = N' in the config)");
  return *seed;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [name, key] : keys()) out += name + " = " + key.get(*this) + "\n";
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    cfg.set(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace cinnrl::app
