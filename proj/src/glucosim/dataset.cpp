#include "cinnrl/glucosim/dataset.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/numkit/text.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace cinnrl::glucosim {

using num::format_double;

Dataset gen_dataset(const PatientModel& model, const DosePolicy& policy, const GenConfig& cfg) {
  if (cfg.steps < 1 || cfg.n_traj < 1) throw Error("gen_dataset: need at least one trajectory of one step");
  const MealSchedule meals(cfg.meals, model.dt());
  const Index n = model.state_dim();
  const Index rows = static_cast<Index>(cfg.n_traj) * cfg.steps;

  Dataset out;
  out.policy_id = policy.id;
  out.seed = cfg.seed;
  out.dt = model.dt();
  out.steps = cfg.steps;
  out.data.s.resize(rows, n);
  out.data.a.resize(rows, 2);
  out.data.s_next.resize(rows, n);
  out.traj_id.reserve(static_cast<std::size_t>(rows));
  out.t.reserve(static_cast<std::size_t>(rows));

  const Vector rest = model.resting_state(cfg.therapy.basal);
  Index row = 0;
  for (int k = 0; k < cfg.n_traj; ++k) {
    num::Rng rng(num::derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
    std::normal_distribution<double> start(120.0, cfg.initial_spread);
    Vector s = model.with_glucose(rest, std::clamp(start(rng), 70.0, 250.0));
    for (int t = 0; t < cfg.steps; ++t, ++row) {
      Vector a(2);
      a(1) = meals.carbs_at(t);
      a(0) = sample_dose(cfg.therapy, policy, model.glucose(s), a(1), rng);
      bool clamped = false;
      Vector next = model.step(s, a, &clamped);
      out.clamp_events += clamped ? 1 : 0;
      out.data.s.row(row) = s.transpose();
      out.data.a.row(row) = a.transpose();
      out.data.s_next.row(row) = next.transpose();
      out.traj_id.push_back(k);
      out.t.push_back(t);
      s = std::move(next);
    }
  }
  return out;
}

std::string to_csv(const Dataset& data) {
  const Index n = data.data.state_dim();
  std::string out = "traj_id,t";
  for (Index j = 0; j < n; ++j) out += ",s_" + std::to_string(j);
  out += ",insulin,carbs";
  for (Index j = 0; j < n; ++j) out += ",s_next_" + std::to_string(j);
  out += '\n';
  for (Index r = 0; r < data.size(); ++r) {
    out += std::to_string(data.traj_id[static_cast<std::size_t>(r)]);
    out += ',';
    out += std::to_string(data.t[static_cast<std::size_t>(r)]);
    for (Index j = 0; j < n; ++j) (out += ',') += format_double(data.data.s(r, j));
    for (Index j = 0; j < 2; ++j) (out += ',') += format_double(data.data.a(r, j));
    for (Index j = 0; j < n; ++j) (out += ',') += format_double(data.data.s_next(r, j));
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_csv(const Dataset& data, const std::filesystem::path& path) { write_file_atomic(path, to_csv(data)); }

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset " + path.string() + " is empty");
  const auto header = num::split(line, ',');
  const auto cols = static_cast<Index>(header.size());
  if (cols < 6 || (cols - 4) % 2 != 0 || header[0] != "traj_id" || header[1] != "t") {
    throw ParseError("dataset " + path.string() + ": unexpected header");
  }
  const Index n = (cols - 4) / 2;
  if (header[static_cast<std::size_t>(2 + n)] != "insulin" || header[static_cast<std::size_t>(3 + n)] != "carbs") {
    throw ParseError("dataset " + path.string() + ": missing insulin/carbs columns");
  }

  std::vector<std::vector<double>> values;
  Dataset out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = num::split(line, ',');
    if (static_cast<Index>(fields.size()) != cols) {
      throw ParseError("dataset " + path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " fields");
    }
    try {
      out.traj_id.push_back(static_cast<int>(num::parse_int(fields[0])));
      out.t.push_back(static_cast<int>(num::parse_int(fields[1])));
      std::vector<double> row;
      for (std::size_t j = 2; j < fields.size(); ++j) row.push_back(num::parse_double(fields[j]));
      values.push_back(std::move(row));
    } catch (const ParseError& ex) {
      throw ParseError("dataset " + path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  const auto rows = static_cast<Index>(values.size());
  out.data.s.resize(rows, n);
  out.data.a.resize(rows, 2);
  out.data.s_next.resize(rows, n);
  for (Index r = 0; r < rows; ++r) {
    const auto& v = values[static_cast<std::size_t>(r)];
    for (Index j = 0; j < n; ++j) out.data.s(r, j) = v[static_cast<std::size_t>(j)];
    for (Index j = 0; j < 2; ++j) out.data.a(r, j) = v[static_cast<std::size_t>(n + j)];
    for (Index j = 0; j < n; ++j) out.data.s_next(r, j) = v[static_cast<std::size_t>(n + 2 + j)];
  }
  out.steps = out.t.empty() ? 0 : *std::max_element(out.t.begin(), out.t.end()) + 1;
  return out;
}

Vector scm_counterfactual_oracle(const ToyParams& p, const Vector& s, const Vector& s_next) {
  if (p.beta1 == 0.0 || p.beta2 == 0.0) throw Error("scm_counterfactual_oracle: beta coefficients must be nonzero");
  if (s.size() != 6 || s_next.size() != 6) throw ShapeError("scm_counterfactual_oracle: toy states have 6 slots");
  Vector a(2);
  a(0) = (s_next(0) - p.alpha[0] * s(0) - p.gamma * s(1)) / p.beta1;
  a(1) = (s_next(1) - p.alpha[1] * s(1)) / p.beta2;
  return a;
}

}  // namespace cinnrl::glucosim
