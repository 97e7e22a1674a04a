#include "cinnrl/cinn/blocks.hpp"

#include "cinnrl/error.hpp"

namespace cinnrl::cinn {

using num::Parameter;

namespace {

num::Mlp zero_net(Index in, Index out, const BlockOptions& opt) {
  return num::Mlp({in, opt.hidden, out}, opt.negative_slope);
}

num::Mlp random_net(Index in, Index out, const BlockOptions& opt, num::Rng& rng) {
  return num::Mlp::random({in, opt.hidden, out}, rng, opt.negative_slope, opt.init_gain);
}

template <typename P>
void append(std::vector<P>& out, std::vector<P> more) {
  out.insert(out.end(), more.begin(), more.end());
}

void check_width(const Var& x, Index expect, const char* what) {
  if (x.cols() != expect) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expect) + " columns, got " +
                     std::to_string(x.cols()));
  }
}

}  // namespace

CouplingPair CouplingPair::zero(Index d1, Index d2, const BlockOptions& opt) {
  return {zero_net(d1, d2, opt), zero_net(d2, d1, opt), zero_net(d1, d2, opt), zero_net(d2, d1, opt)};
}

CouplingPair CouplingPair::random(Index d1, Index d2, const BlockOptions& opt, num::Rng& rng) {
  CouplingPair c;
  c.m1 = random_net(d1, d2, opt, rng);
  c.m2 = random_net(d2, d1, opt, rng);
  c.n1 = random_net(d1, d2, opt, rng);
  c.n2 = random_net(d2, d1, opt, rng);
  return c;
}

SymmetricBlock::SymmetricBlock(causal::SymmetricSpec spec, num::OrthoParam fusion,
                               std::vector<CouplingPair> couplings, double scale_clamp)
    : spec_(std::move(spec)),
      fusion_(std::move(fusion)),
      couplings_(std::move(couplings)),
      scale_clamp_(scale_clamp) {
  if (fusion_.rows() != spec_.d1 || fusion_.order() != spec_.io_dim) {
    throw ShapeError("SymmetricBlock: fusion must be " + std::to_string(spec_.d1) + "x" +
                     std::to_string(spec_.io_dim));
  }
  for (const CouplingPair& c : couplings_) {
    if (c.m1.in_dim() != spec_.d1 || c.m1.out_dim() != spec_.d2 || c.n1.in_dim() != spec_.d1 ||
        c.n1.out_dim() != spec_.d2 || c.m2.in_dim() != spec_.d2 || c.m2.out_dim() != spec_.d1 ||
        c.n2.in_dim() != spec_.d2 || c.n2.out_dim() != spec_.d1) {
      throw ShapeError("SymmetricBlock: coupling network widths do not match the split");
    }
  }
}

SymmetricBlock SymmetricBlock::random(const causal::SymmetricSpec& spec, const BlockOptions& opt,
                                      num::Rng& rng) {
  auto fusion = num::OrthoParam::random(spec.d1, spec.io_dim, rng, opt.reflectors);
  std::vector<CouplingPair> couplings;
  for (int i = 0; i < opt.coupling_depth; ++i) couplings.push_back(CouplingPair::random(spec.d1, spec.d2, opt, rng));
  return SymmetricBlock(spec, std::move(fusion), std::move(couplings), opt.scale_clamp);
}

Var SymmetricBlock::forward(const Var& u1, const Var& u2, bool trainable) const {
  check_width(u1, spec_.d1, "SymmetricBlock::forward u1");
  check_width(u2, spec_.d2, "SymmetricBlock::forward u2");
  const Var l = num::matmul(u1, fusion_.materialize(trainable));
  Var q1 = num::columns(l, 0, spec_.d1);
  Var q2 = num::columns(l, spec_.d1, spec_.d2) + u2;
  const double c = scale_clamp_;
  for (const CouplingPair& cp : couplings_) {
    Var v1 = num::hadamard(q1, num::exp(num::clamp(cp.m2.forward(q2, trainable), -c, c))) +
             cp.n2.forward(q2, trainable);
    Var v2 = num::hadamard(q2, num::exp(num::clamp(cp.m1.forward(v1, trainable), -c, c))) +
             cp.n1.forward(v1, trainable);
    q1 = std::move(v1);
    q2 = std::move(v2);
  }
  return num::hconcat({q1, q2});
}

Var SymmetricBlock::inverse(const Var& v, const Var& u2, bool trainable) const {
  check_width(v, spec_.io_dim, "SymmetricBlock::inverse v");
  check_width(u2, spec_.d2, "SymmetricBlock::inverse u2");
  Var v1 = num::columns(v, 0, spec_.d1);
  Var v2 = num::columns(v, spec_.d1, spec_.d2);
  const double c = scale_clamp_;
  for (auto it = couplings_.rbegin(); it != couplings_.rend(); ++it) {
    Var q2 = num::hadamard(v2 - it->n1.forward(v1, trainable),
                           num::exp(-num::clamp(it->m1.forward(v1, trainable), -c, c)));
    Var q1 = num::hadamard(v1 - it->n2.forward(q2, trainable),
                           num::exp(-num::clamp(it->m2.forward(q2, trainable), -c, c)));
    v1 = std::move(q1);
    v2 = std::move(q2);
  }
  const Var l = num::hconcat({v1, v2 - u2});
  return num::matmul(l, num::transpose(fusion_.materialize(trainable)));
}

std::vector<Parameter*> SymmetricBlock::parameters() {
  std::vector<Parameter*> out{&fusion_.reflectors()};
  for (CouplingPair& c : couplings_) {
    append(out, c.m1.parameters());
    append(out, c.m2.parameters());
    append(out, c.n1.parameters());
    append(out, c.n2.parameters());
  }
  return out;
}

std::vector<const Parameter*> SymmetricBlock::parameters() const {
  std::vector<const Parameter*> out{&fusion_.reflectors()};
  for (const CouplingPair& c : couplings_) {
    append(out, c.m1.parameters());
    append(out, c.m2.parameters());
    append(out, c.n1.parameters());
    append(out, c.n2.parameters());
  }
  return out;
}

AsymmetricBlock::AsymmetricBlock(causal::AsymmetricSpec spec, num::OrthoParam proj, Parameter bias)
    : spec_(std::move(spec)), proj_(std::move(proj)), bias_(std::move(bias)) {
  if (proj_.rows() != spec_.out_dim || proj_.order() != spec_.in_dim) {
    throw ShapeError("AsymmetricBlock: projection must be " + std::to_string(spec_.out_dim) + "x" +
                     std::to_string(spec_.in_dim));
  }
  if (bias_.value.rows() != 1 || bias_.value.cols() != spec_.out_dim) {
    throw ShapeError("AsymmetricBlock: bias must be 1x" + std::to_string(spec_.out_dim));
  }
  if (hidden_dim() > spec_.out_dim) throw ShapeError("AsymmetricBlock: more unknowns than outputs");
}

AsymmetricBlock AsymmetricBlock::random(const causal::AsymmetricSpec& spec, const BlockOptions& opt,
                                        num::Rng& rng) {
  auto proj = num::OrthoParam::random(spec.out_dim, spec.in_dim, rng, opt.reflectors);
  return AsymmetricBlock(spec, std::move(proj), Parameter(Matrix::Zero(1, spec.out_dim)));
}

Index AsymmetricBlock::hidden_dim() const {
  return spec_.in_dim - static_cast<Index>(spec_.known_slots.size());
}

Var AsymmetricBlock::forward(const Var& x, bool trainable) const {
  check_width(x, spec_.in_dim, "AsymmetricBlock::forward");
  const Var w = proj_.materialize(trainable);
  return num::add_rowwise(num::matmul(x, num::transpose(w)), num::bind(bias_, trainable));
}

Var AsymmetricBlock::inverse(const Var& y, const Var& known, bool trainable) const {
  check_width(y, spec_.out_dim, "AsymmetricBlock::inverse y");
  check_width(known, static_cast<Index>(spec_.known_slots.size()), "AsymmetricBlock::inverse known");
  const Index h = hidden_dim();
  const Var w = proj_.materialize(trainable);
  const Var w_u = num::columns(w, 0, h);
  Var rhs = num::add_rowwise(y, -num::bind(bias_, trainable));
  if (known.cols() > 0) rhs = rhs - num::matmul(known, num::transpose(num::columns(w, h, known.cols())));
  return num::transpose(num::lstsq(w_u, num::transpose(rhs)));
}

std::vector<Parameter*> AsymmetricBlock::parameters() { return {&proj_.reflectors(), &bias_}; }

std::vector<const Parameter*> AsymmetricBlock::parameters() const {
  return {&proj_.reflectors(), &bias_};
}

}  // namespace cinnrl::cinn
