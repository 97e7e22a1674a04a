#include "cinnrl/cinn/model.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/numkit/digest.hpp"

namespace cinnrl::cinn {

using num::Parameter;

Matrix BidirectionalModel::predict(const Matrix& s, const Matrix& a) const {
  const Var out = forward(num::constant(scaling.state.apply(s)), num::constant(scaling.action.apply(a)), false);
  return scaling.state.invert(out.value());
}

Matrix BidirectionalModel::infer(const Matrix& s, const Matrix& s_next) const {
  const Var out = inverse(num::constant(scaling.state.apply(s)),
                          num::constant(scaling.state.apply(s_next)), false);
  return scaling.action.invert(out.value());
}

CinnModel::CinnModel(causal::BlockPlan plan, std::vector<Block> blocks, BlockOptions options)
    : plan_(std::move(plan)), blocks_(std::move(blocks)), options_(options) {
  causal::validate(plan_);
  if (blocks_.size() != plan_.blocks.size()) throw ShapeError("CinnModel: block count differs from plan");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const bool same = std::visit(
        [&](const auto& b) {
          using Spec = std::decay_t<decltype(b.spec())>;
          const auto* spec = std::get_if<Spec>(&plan_.blocks[i]);
          return spec != nullptr && *spec == b.spec();
        },
        blocks_[i]);
    if (!same) throw ShapeError("CinnModel: block " + std::to_string(i) + " does not match the plan");
  }
  scaling = Scaling::identity(plan_.state_dim, plan_.action_dim);
}

CinnModel CinnModel::random(const causal::BlockPlan& plan, const BlockOptions& options, num::Rng& rng) {
  std::vector<Block> blocks;
  for (const causal::BlockSpec& spec : plan.blocks) {
    if (const auto* s = std::get_if<causal::SymmetricSpec>(&spec)) {
      blocks.emplace_back(SymmetricBlock::random(*s, options, rng));
    } else {
      blocks.emplace_back(AsymmetricBlock::random(std::get<causal::AsymmetricSpec>(spec), options, rng));
    }
  }
  return CinnModel(plan, std::move(blocks), options);
}

namespace {

std::vector<Index> as_index(const std::vector<int>& slots) {
  return {slots.begin(), slots.end()};
}

void check_batch(const Var& x, Index cols, const char* what) {
  if (x.cols() != cols) {
    throw ShapeError(std::string("CinnModel: ") + what + " has " + std::to_string(x.cols()) +
                     " columns, expected " + std::to_string(cols));
  }
}

}  // namespace

Var CinnModel::forward(const Var& s, const Var& a, bool trainable) const {
  check_batch(s, plan_.state_dim, "state");
  check_batch(a, plan_.action_dim, "action");
  trainable = trainable && !frozen_;
  Var h = a;
  for (const Block& block : blocks_) {
    if (const auto* sym = std::get_if<SymmetricBlock>(&block)) {
      h = sym->forward(h, num::select_columns(s, as_index(sym->spec().state_slots)), trainable);
    } else {
      const auto& asym = std::get<AsymmetricBlock>(block);
      const Var known = num::select_columns(s, as_index(asym.spec().known_slots));
      h = asym.forward(known.cols() > 0 ? num::hconcat({h, known}) : h, trainable);
    }
  }
  return h;
}

Var CinnModel::inverse(const Var& s, const Var& s_next, bool trainable) const {
  check_batch(s, plan_.state_dim, "state");
  check_batch(s_next, plan_.state_dim, "next state");
  trainable = trainable && !frozen_;
  Var h = s_next;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    if (const auto* sym = std::get_if<SymmetricBlock>(&*it)) {
      h = sym->inverse(h, num::select_columns(s, as_index(sym->spec().state_slots)), trainable);
    } else {
      const auto& asym = std::get<AsymmetricBlock>(*it);
      h = asym.inverse(h, num::select_columns(s, as_index(asym.spec().known_slots)), trainable);
    }
  }
  return h;
}

std::vector<Parameter*> CinnModel::parameters() {
  if (frozen_) throw Error("CinnModel is frozen; parameters are read-only");
  std::vector<Parameter*> out;
  for (Block& block : blocks_) {
    auto more = std::visit([](auto& b) { return b.parameters(); }, block);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::vector<const Parameter*> CinnModel::parameters() const {
  std::vector<const Parameter*> out;
  for (const Block& block : blocks_) {
    auto more = std::visit([](const auto& b) { return b.parameters(); }, block);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::string CinnModel::parameter_hash() const {
  std::string bytes;
  auto put = [&](const auto& m) {
    const Matrix dense = m;
    bytes.append(reinterpret_cast<const char*>(dense.data()), sizeof(double) * static_cast<std::size_t>(dense.size()));
  };
  for (const Parameter* p : parameters()) put(p->value);
  put(scaling.state.mean);
  put(scaling.state.scale);
  put(scaling.action.mean);
  put(scaling.action.scale);
  return num::sha256_hex(bytes);
}

std::vector<Matrix> CinnModel::orthogonal_maps() const {
  std::vector<Matrix> out;
  for (const Block& block : blocks_) {
    if (const auto* sym = std::get_if<SymmetricBlock>(&block)) {
      out.push_back(sym->fusion().materialize());
    } else {
      out.push_back(std::get<AsymmetricBlock>(block).proj().materialize());
    }
  }
  return out;
}

}  // namespace cinnrl::cinn
