#include "cinnrl/cinn/checkpoint.hpp"

#include "cinnrl/error.hpp"

#include <fstream>

namespace cinnrl::cinn {

using nlohmann::json;

namespace {

// Field lookup that reports the full path of anything missing.
const json& field(const json& doc, const std::string& key, const std::string& path) {
  if (!doc.is_object()) throw ParseError("checkpoint: '" + path + "' is not an object");
  const auto it = doc.find(key);
  if (it == doc.end()) {
    throw ParseError("checkpoint: missing field '" + (path.empty() ? key : path + "." + key) + "'");
  }
  return *it;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

json row_to_json(const num::RowVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

num::RowVector row_from_json(const json& doc) {
  const auto values = doc.get<std::vector<double>>();
  return Eigen::Map<const num::RowVector>(values.data(), static_cast<Index>(values.size()));
}

json normalizer_to_json(const Normalizer& n) {
  return {{"mean", row_to_json(n.mean)}, {"scale", row_to_json(n.scale)}};
}

Normalizer normalizer_from_json(const json& doc, const std::string& path) {
  return {row_from_json(field(doc, "mean", path)), row_from_json(field(doc, "scale", path))};
}

json ortho_to_json(const num::OrthoParam& p) {
  return {{"rows", p.rows()}, {"order", p.order()}, {"reflectors", matrix_to_json(p.reflectors().value)}};
}

num::OrthoParam ortho_from_json(const json& doc, const std::string& path) {
  const auto rows = field(doc, "rows", path).get<Index>();
  const auto order = field(doc, "order", path).get<Index>();
  return num::OrthoParam(rows, num::Parameter(matrix_from_json(field(doc, "reflectors", path), order)));
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    const num::RowVector row = m.row(r);
    rows.push_back(row_to_json(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, Index cols) {
  if (!rows.is_array()) throw ParseError("matrix must be an array of rows");
  if (rows.empty()) return Matrix(0, std::max<Index>(cols, 0));
  const Index c = static_cast<Index>(rows.front().size());
  Matrix m(static_cast<Index>(rows.size()), c);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto values = rows[r].get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != c) throw ParseError("matrix rows have different lengths");
    for (Index j = 0; j < c; ++j) m(static_cast<Index>(r), j) = values[static_cast<std::size_t>(j)];
  }
  return m;
}

json mlp_to_json(const num::Mlp& net) {
  json layers = json::array();
  for (const num::Linear& l : net.layers()) {
    layers.push_back({{"weight", matrix_to_json(l.weight.value)}, {"bias", row_to_json(l.bias.value)}});
  }
  return {{"negative_slope", net.negative_slope()}, {"layers", layers}};
}

num::Mlp mlp_from_json(const json& doc) {
  const auto& layers = field(doc, "layers", "mlp");
  if (layers.empty()) throw ParseError("checkpoint: mlp has no layers");
  std::vector<Index> widths;
  std::vector<num::Linear> parsed;
  for (const json& l : layers) {
    num::Linear lin;
    lin.weight.value = matrix_from_json(field(l, "weight", "mlp.layers[]"));
    lin.bias.value = row_from_json(field(l, "bias", "mlp.layers[]"));
    if (widths.empty()) widths.push_back(lin.in_dim());
    if (lin.in_dim() != widths.back() || lin.bias.value.cols() != lin.out_dim()) {
      throw ParseError("checkpoint: mlp layer widths do not chain");
    }
    widths.push_back(lin.out_dim());
    parsed.push_back(std::move(lin));
  }
  num::Mlp net(widths, field(doc, "negative_slope", "mlp").get<double>());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    net.layers()[i].weight.value = parsed[i].weight.value;
    net.layers()[i].bias.value = parsed[i].bias.value;
  }
  return net;
}

json to_json(const CinnModel& model) {
  const BlockOptions& o = model.options();
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["options"] = {{"hidden", o.hidden},
                    {"coupling_depth", o.coupling_depth},
                    {"negative_slope", o.negative_slope},
                    {"scale_clamp", o.scale_clamp},
                    {"reflectors", o.reflectors},
                    {"init_gain", o.init_gain}};
  doc["plan"] = causal::to_json(model.plan());
  doc["scaling"] = {{"state", normalizer_to_json(model.scaling.state)},
                    {"action", normalizer_to_json(model.scaling.action)}};
  json blocks = json::array();
  for (const Block& block : model.blocks()) {
    if (const auto* sym = std::get_if<SymmetricBlock>(&block)) {
      json couplings = json::array();
      for (const CouplingPair& c : sym->couplings()) {
        couplings.push_back({{"m1", mlp_to_json(c.m1)},
                             {"m2", mlp_to_json(c.m2)},
                             {"n1", mlp_to_json(c.n1)},
                             {"n2", mlp_to_json(c.n2)}});
      }
      blocks.push_back({{"type", "symmetric"}, {"fusion", ortho_to_json(sym->fusion())}, {"couplings", couplings}});
    } else {
      const auto& asym = std::get<AsymmetricBlock>(block);
      blocks.push_back({{"type", "asymmetric"},
                        {"proj", ortho_to_json(asym.proj())},
                        {"bias", row_to_json(asym.bias().value)}});
    }
  }
  doc["blocks"] = blocks;
  return doc;
}

CinnModel model_from_json(const json& doc) {
  try {
    if (field(doc, "format", "").get<std::string>() != kCheckpointFormat) {
      throw ParseError("checkpoint: unexpected format tag");
    }
    const int version = field(doc, "version", "").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError("checkpoint: schema version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
    }
    const json& opt = field(doc, "options", "");
    BlockOptions o;
    o.hidden = field(opt, "hidden", "options").get<Index>();
    o.coupling_depth = field(opt, "coupling_depth", "options").get<int>();
    o.negative_slope = field(opt, "negative_slope", "options").get<double>();
    o.scale_clamp = field(opt, "scale_clamp", "options").get<double>();
    o.reflectors = field(opt, "reflectors", "options").get<Index>();
    o.init_gain = field(opt, "init_gain", "options").get<double>();

    const causal::BlockPlan plan = causal::plan_from_json(field(doc, "plan", ""));
    const json& blocks_doc = field(doc, "blocks", "");
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < blocks_doc.size(); ++i) {
      const json& b = blocks_doc[i];
      const std::string path = "blocks[" + std::to_string(i) + "]";
      if (i >= plan.blocks.size()) throw ParseError("checkpoint: more blocks than the plan lists");
      const std::string type = field(b, "type", path).get<std::string>();
      if (type == "symmetric") {
        const auto* spec = std::get_if<causal::SymmetricSpec>(&plan.blocks[i]);
        if (!spec) throw ParseError("checkpoint: " + path + " type differs from the plan");
        std::vector<CouplingPair> couplings;
        const json& cs = field(b, "couplings", path);
        for (std::size_t j = 0; j < cs.size(); ++j) {
          const std::string cp = join(path, "couplings[" + std::to_string(j) + "]");
          couplings.push_back({mlp_from_json(field(cs[j], "m1", cp)), mlp_from_json(field(cs[j], "m2", cp)),
                               mlp_from_json(field(cs[j], "n1", cp)), mlp_from_json(field(cs[j], "n2", cp))});
        }
        blocks.emplace_back(SymmetricBlock(*spec, ortho_from_json(field(b, "fusion", path), join(path, "fusion")),
                                           std::move(couplings), o.scale_clamp));
      } else if (type == "asymmetric") {
        const auto* spec = std::get_if<causal::AsymmetricSpec>(&plan.blocks[i]);
        if (!spec) throw ParseError("checkpoint: " + path + " type differs from the plan");
        blocks.emplace_back(AsymmetricBlock(*spec, ortho_from_json(field(b, "proj", path), join(path, "proj")),
                                            num::Parameter(row_from_json(field(b, "bias", path)))));
      } else {
        throw ParseError("checkpoint: " + path + " has unknown type '" + type + "'");
      }
    }
    CinnModel model(plan, std::move(blocks), o);
    const json& sc = field(doc, "scaling", "");
    model.scaling.state = normalizer_from_json(field(sc, "state", "scaling"), "scaling.state");
    model.scaling.action = normalizer_from_json(field(sc, "action", "scaling"), "scaling.action");
    if (model.scaling.state.dim() != plan.state_dim || model.scaling.action.dim() != plan.action_dim) {
      throw ParseError("checkpoint: scaling widths do not match the plan");
    }
    return model;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("checkpoint: ") + ex.what());
  } catch (const ShapeError& ex) {
    throw ParseError(std::string("checkpoint: ") + ex.what());
  } catch (const GraphError& ex) {
    throw ParseError(std::string("checkpoint: ") + ex.what());
  }
}

void save_model(const CinnModel& model, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out << to_json(model).dump(1) << '\n';
    if (!out) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CinnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& ex) {
    throw ParseError("checkpoint " + path.string() + ": " + ex.what());
  }
  return model_from_json(doc);
}

}  // namespace cinnrl::cinn
