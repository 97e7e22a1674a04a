#include "gradcheck.hpp"

#include "cinnrl/causal/layering.hpp"
#include "cinnrl/cinn/baseline.hpp"
#include "cinnrl/cinn/checkpoint.hpp"
#include "cinnrl/cinn/train.hpp"
#include "cinnrl/glucosim/dataset.hpp"
#include "cinnrl/numkit/linalg.hpp"
#include "cinnrl/numkit/random.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace cinnrl;
using namespace cinnrl::cinn;
using num::constant;
using num::normal_matrix;
using num::Rng;

namespace {

double leaky(double x) { return x >= 0 ? x : 0.01 * x; }

// Plain loops over the layer matrices; shares nothing with Mlp::forward.
Matrix eval_net(const num::Mlp& net, const Matrix& x) {
  Matrix h = x;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& w = layers[l].weight.value;
    Matrix out(h.rows(), w.cols());
    for (Index r = 0; r < h.rows(); ++r) {
      for (Index j = 0; j < w.cols(); ++j) {
        double acc = layers[l].bias.value(0, j);
        for (Index i = 0; i < w.rows(); ++i) acc += h(r, i) * w(i, j);
        out(r, j) = l + 1 < layers.size() ? leaky(acc) : acc;
      }
    }
    h = out;
  }
  return h;
}

Matrix clamp_exp(const Matrix& m, double c) {
  return m.unaryExpr([c](double x) { return std::exp(std::clamp(x, -c, c)); });
}

causal::SymmetricSpec sym_spec() { return {4, 2, 2, {0, 1}}; }

causal::BlockPlan toy_plan() {
  const auto dag = glucosim::toy_dag();
  return causal::plan_structure(causal::topo_layering(dag), dag);
}

causal::BlockPlan patient_plan() {
  const auto dag = glucosim::ode_dag();
  return causal::plan_structure(causal::topo_layering(dag), dag);
}

BlockOptions small_options() {
  BlockOptions o;
  o.hidden = 8;
  return o;
}

// A model with fixed outputs, for checking the loss definition.
class FixedModel : public BidirectionalModel {
 public:
  FixedModel(Matrix s_next, Matrix a) : s_next_(std::move(s_next)), a_(std::move(a)) {
    scaling = Scaling::identity(s_next_.cols(), a_.cols());
  }
  Var forward(const Var&, const Var&, bool) const override { return constant(s_next_); }
  Var inverse(const Var&, const Var&, bool) const override { return constant(a_); }
  std::vector<num::Parameter*> parameters() override { return {}; }
  Index state_dim() const override { return s_next_.cols(); }
  Index action_dim() const override { return a_.cols(); }

 private:
  Matrix s_next_;
  Matrix a_;
};

Transitions random_transitions(Index rows, Index n, Rng& rng) {
  return {normal_matrix(rows, n, rng), normal_matrix(rows, 2, rng), normal_matrix(rows, n, rng)};
}

glucosim::Dataset toy_data(int n_traj, std::uint64_t seed) {
  const auto patient = glucosim::PatientModel::toy();
  glucosim::GenConfig gen;
  gen.n_traj = n_traj;
  gen.seed = seed;
  gen.therapy = patient.nominal_therapy();
  return glucosim::gen_dataset(patient, glucosim::dose_policy(0), gen);
}

}  // namespace

TEST_CASE("symmetric block with zero couplings is the fusion map plus u2") {
  const BlockOptions opt;
  std::vector<CouplingPair> couplings{CouplingPair::zero(2, 2, opt), CouplingPair::zero(2, 2, opt)};
  const SymmetricBlock block(sym_spec(), num::OrthoParam(2, 4), couplings);
  Matrix u1(1, 2), u2(1, 2);
  u1 << 1.5, -2.0;
  u2 << 0.25, 3.0;
  const Matrix v = block.forward(constant(u1), constant(u2)).value();
  Matrix expected(1, 4);
  expected << 1.5, -2.0, 0.25, 3.0;
  CHECK(v.isApprox(expected, 1e-15));
}

TEST_CASE("symmetric block matches a straight-line evaluation") {
  Rng rng(21);
  BlockOptions opt;
  opt.hidden = 6;
  const SymmetricBlock block = SymmetricBlock::random(sym_spec(), opt, rng);
  const Matrix u1 = normal_matrix(5, 2, rng), u2 = normal_matrix(5, 2, rng);
  const Matrix w = block.fusion().materialize();
  const Matrix l = u1 * w;
  Matrix q1 = l.leftCols(2);
  Matrix q2 = l.rightCols(2) + u2;
  const double c = block.scale_clamp();
  for (const CouplingPair& cp : block.couplings()) {
    const Matrix v1 = q1.cwiseProduct(clamp_exp(eval_net(cp.m2, q2), c)) + eval_net(cp.n2, q2);
    const Matrix v2 = q2.cwiseProduct(clamp_exp(eval_net(cp.m1, v1), c)) + eval_net(cp.n1, v1);
    q1 = v1;
    q2 = v2;
  }
  Matrix expected(5, 4);
  expected << q1, q2;
  const Matrix v = block.forward(constant(u1), constant(u2)).value();
  CHECK((v - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("symmetric block outputs stay finite on a bounded box") {
  Rng rng(22);
  const SymmetricBlock block = SymmetricBlock::random(sym_spec(), BlockOptions{}, rng);
  const Matrix u1 = num::uniform_matrix(200, 2, rng, -10.0, 10.0);
  const Matrix u2 = num::uniform_matrix(200, 2, rng, -10.0, 10.0);
  CHECK(block.forward(constant(u1), constant(u2)).value().allFinite());
}

TEST_CASE("symmetric block inverse recovers u1") {
  for (std::uint64_t seed : {23u, 24u, 25u}) {
    Rng rng(seed);
    const SymmetricBlock block = SymmetricBlock::random(sym_spec(), BlockOptions{}, rng);
    const Matrix u1 = normal_matrix(10, 2, rng), u2 = normal_matrix(10, 2, rng);
    const Var v = block.forward(constant(u1), constant(u2));
    const Matrix back = block.inverse(v, constant(u2)).value();
    CHECK((back - u1).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("affine symmetric block inverts in closed form") {
  Rng rng(26);
  const BlockOptions opt;
  const SymmetricBlock block(sym_spec(), num::OrthoParam::random(2, 4, rng), {CouplingPair::zero(2, 2, opt)});
  const Matrix w = block.fusion().materialize();
  const Matrix v = normal_matrix(3, 4, rng), u2 = normal_matrix(3, 2, rng);
  // v = u1 W + [0, u2] and W W^T = I, so u1 = (v - [0, u2]) W^T.
  Matrix shifted = v;
  shifted.rightCols(2) -= u2;
  const Matrix expected = shifted * w.transpose();
  CHECK((block.inverse(constant(v), constant(u2)).value() - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("symmetric inverse changes smoothly with the conditioning input") {
  Rng rng(27);
  const SymmetricBlock block = SymmetricBlock::random(sym_spec(), BlockOptions{}, rng);
  const Matrix v = normal_matrix(1, 4, rng), u2 = normal_matrix(1, 2, rng);
  const Matrix dir = normal_matrix(1, 2, rng).normalized();
  const Matrix base = block.inverse(constant(v), constant(u2)).value();
  const auto change = [&](double delta) {
    const Matrix moved = block.inverse(constant(v), constant(Matrix(u2 + delta * dir))).value();
    return (moved - base).norm();
  };
  const double lipschitz = change(1e-4) / 1e-4;
  CHECK(std::isfinite(lipschitz));
  for (double delta : {1e-5, 1e-6, 1e-7}) CHECK(change(delta) <= 1.1 * lipschitz * delta);
}

TEST_CASE("asymmetric block inverse recovers the hidden part") {
  Rng rng(31);
  const causal::AsymmetricSpec spec{8, 6, {2, 3, 4, 5}};
  AsymmetricBlock block = AsymmetricBlock::random(spec, BlockOptions{}, rng);
  block.parameters()[1]->value = normal_matrix(1, 6, rng);
  const Matrix hidden = normal_matrix(7, 4, rng), known = normal_matrix(7, 4, rng);
  Matrix x(7, 8);
  x << hidden, known;
  const Var y = block.forward(constant(x));
  CHECK((block.inverse(y, constant(known)).value() - hidden).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("identity-row asymmetric block truncates and refills") {
  const causal::AsymmetricSpec spec{8, 6, {2, 3, 4, 5}};
  const AsymmetricBlock block(spec, num::OrthoParam(6, 8), num::Parameter(Matrix::Zero(1, 6)));
  Rng rng(32);
  const Matrix x = normal_matrix(3, 8, rng);
  const Matrix y = block.forward(constant(x)).value();
  CHECK(y == x.leftCols(6));
  CHECK(block.inverse(constant(y), constant(Matrix(x.rightCols(4)))).value().isApprox(x.leftCols(4), 1e-14));
}

TEST_CASE("asymmetric inverse matches the normal equations") {
  Rng rng(33);
  const causal::AsymmetricSpec spec{8, 6, {2, 3, 4, 5}};
  AsymmetricBlock block = AsymmetricBlock::random(spec, BlockOptions{}, rng);
  block.parameters()[1]->value = normal_matrix(1, 6, rng);
  const Matrix w = block.proj().materialize();
  const Matrix y = normal_matrix(4, 6, rng), known = normal_matrix(4, 4, rng);
  const Matrix wu = w.leftCols(4), wk = w.rightCols(4);
  const Matrix rhs = (y.rowwise() - block.bias().value.row(0)) - known * wk.transpose();
  const Matrix expected = ((wu.transpose() * wu).ldlt().solve(wu.transpose() * rhs.transpose())).transpose();
  CHECK((block.inverse(constant(y), constant(known)).value() - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("asymmetric inverse rejects a rank-deficient hidden block") {
  const causal::AsymmetricSpec spec{8, 6, {2, 3, 4, 5}};
  // The reflector e0 - e7 swaps coordinates 0 and 7, so the first column of
  // the leading six rows is zero.
  Matrix v = Matrix::Zero(1, 8);
  v(0, 0) = 1.0;
  v(0, 7) = -1.0;
  const AsymmetricBlock block(spec, num::OrthoParam(6, num::Parameter(v)), num::Parameter(Matrix::Zero(1, 6)));
  CHECK_THROWS_AS(block.inverse(constant(Matrix::Ones(1, 6)), constant(Matrix::Ones(1, 4))), RankError);
}

TEST_CASE("patient model predicts 13 states and infers 2 actions") {
  Rng rng(41);
  const CinnModel model = CinnModel::random(patient_plan(), small_options(), rng);
  const Matrix s = normal_matrix(3, 13, rng), a = normal_matrix(3, 2, rng);
  const Matrix s_next = model.forward_predict(s, a);
  CHECK(s_next.rows() == 3);
  CHECK(s_next.cols() == 13);
  CHECK(model.counterfactual_infer(s, normal_matrix(3, 13, rng)).cols() == 2);
  CHECK(model.forward_predict(s, a) == s_next);
}

TEST_CASE("toy model with zero couplings is the hand-composed affine path") {
  Rng rng(42);
  const causal::BlockPlan plan = toy_plan();
  const BlockOptions opt;
  const auto& sspec = std::get<causal::SymmetricSpec>(plan.blocks[0]);
  const auto& aspec = std::get<causal::AsymmetricSpec>(plan.blocks[1]);
  SymmetricBlock sym(sspec, num::OrthoParam::random(2, 4, rng), {CouplingPair::zero(2, 2, opt)});
  AsymmetricBlock asym(aspec, num::OrthoParam::random(6, 8, rng), num::Parameter(normal_matrix(1, 6, rng)));
  const Matrix w1 = sym.fusion().materialize(), w2 = asym.proj().materialize();
  const Matrix bias = asym.bias().value;
  const CinnModel model(plan, {sym, asym});
  const Matrix s = normal_matrix(4, 6, rng), a = normal_matrix(4, 2, rng);
  const Matrix out = model.forward_predict(s, a);
  for (Index r = 0; r < 4; ++r) {
    Matrix v = a.row(r) * w1;
    v(0, 2) += s(r, 0);
    v(0, 3) += s(r, 1);
    Matrix x(1, 8);
    x << v, s.block(r, 2, 1, 4);
    const Matrix y = x * w2.transpose() + bias;
    CHECK((out.row(r) - y).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("counterfactual inference inverts forward prediction") {
  for (const auto& plan : {toy_plan(), patient_plan()}) {
    Rng rng(43);
    CinnModel model = CinnModel::random(plan, small_options(), rng);
    const Index n = plan.state_dim;
    model.scaling.state.mean = normal_matrix(1, n, rng);
    model.scaling.state.scale = num::uniform_matrix(1, n, rng, 0.5, 2.0);
    const Matrix s = normal_matrix(20, n, rng), a = normal_matrix(20, 2, rng);
    const Matrix back = model.counterfactual_infer(s, model.forward_predict(s, a));
    CHECK(back.cols() == 2);
    CHECK((back - a).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("bidirectional loss follows the mean squared error definition") {
  Rng rng(51);
  const Transitions data = random_transitions(5, 3, rng);
  const Losses perfect = loss_bidirectional(FixedModel(data.s_next, data.a), data);
  CHECK(perfect.forward == 0.0);
  CHECK(perfect.backward == 0.0);
  CHECK(perfect.total() == 0.0);
  const Losses shifted = loss_bidirectional(FixedModel(data.s_next.array() + 1.0, data.a), data);
  CHECK(shifted.forward == doctest::Approx(1.0).epsilon(1e-12));
  Matrix a = data.a;
  a.col(0).array() += 1.0;
  const Losses one_dim = loss_bidirectional(FixedModel(data.s_next, a), data);
  CHECK(one_dim.backward == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(loss_bidirectional(FixedModel(data.s_next, data.a), data.head(0)), ShapeError);
}

TEST_CASE("one epoch on a repeated sample lowers the loss") {
  Rng rng(52);
  CinnModel model = CinnModel::random(toy_plan(), small_options(), rng);
  const Transitions one = random_transitions(1, 6, rng);
  Transitions data = one.rows(std::vector<Index>(32, 0));
  const double before = loss_bidirectional(model, data).total();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 4;
  cfg.lr = 1e-2;
  train_bidirectional(model, data, {}, cfg);
  CHECK(loss_bidirectional(model, data).total() < before);
}

TEST_CASE("training is deterministic for a seed") {
  const auto run = [] {
    Rng rng(53);
    CinnModel model = CinnModel::random(toy_plan(), small_options(), rng);
    const Transitions data = random_transitions(64, 6, rng);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 9;
    train_bidirectional(model, data, {data}, cfg);
    return model.parameter_hash();
  };
  CHECK(run() == run());
}

TEST_CASE("toy SCM training reaches small forward and inverse errors") {
  const glucosim::Dataset train = toy_data(10, 61);
  const glucosim::Dataset test = toy_data(4, 62);
  BlockOptions opt;
  opt.init_gain = 0.1;
  Rng rng(63);
  CinnModel model = CinnModel::random(toy_plan(), opt, rng);
  model.scaling = Scaling::fit(train.data);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 64;
  const auto history = train_bidirectional(model, train.data, {test.data}, cfg);
  REQUIRE(history.size() == 200);
  const Losses last = history.back().test.front();
  INFO("forward " << last.forward << " backward " << last.backward);
  CHECK(last.forward <= 1e-2);
  CHECK(last.backward <= 1e-2);
  CHECK(last.total() < history.front().test.front().total());
}

TEST_CASE("checkpoints round-trip exactly") {
  Rng rng(71);
  CinnModel model = CinnModel::random(patient_plan(), small_options(), rng);
  model.scaling.state.mean = normal_matrix(1, 13, rng);
  const auto path = std::filesystem::temp_directory_path() / "cinnrl_test_ckpt.json";
  save_model(model, path);
  const CinnModel loaded = load_model(path);
  CHECK(loaded.parameter_hash() == model.parameter_hash());
  const Matrix s = normal_matrix(2, 13, rng), a = normal_matrix(2, 2, rng);
  CHECK(loaded.forward_predict(s, a) == model.forward_predict(s, a));
  CHECK(loaded.plan() == model.plan());
  std::filesystem::remove(path);
}

TEST_CASE("corrupt or incomplete checkpoints are rejected with the field name") {
  Rng rng(72);
  const CinnModel model = CinnModel::random(toy_plan(), small_options(), rng);
  nlohmann::json doc = to_json(model);
  doc.erase("scaling");
  try {
    model_from_json(doc);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("scaling") != std::string::npos);
  }
  nlohmann::json wrong = to_json(model);
  wrong["format"] = "something-else";
  CHECK_THROWS_AS(model_from_json(wrong), ParseError);
  const auto path = std::filesystem::temp_directory_path() / "cinnrl_test_corrupt.json";
  std::ofstream(path) << "{\"format\": ";
  CHECK_THROWS_AS(load_model(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("a frozen model exposes no mutable parameters and keeps its hash") {
  Rng rng(73);
  CinnModel model = CinnModel::random(toy_plan(), small_options(), rng);
  model.freeze();
  const std::string hash = model.parameter_hash();
  CHECK_THROWS(model.parameters());
  const Matrix s = normal_matrix(4, 6, rng), a = normal_matrix(4, 2, rng);
  num::backward(num::sum(num::square(model.forward(constant(s), constant(a), true))));
  num::backward(num::sum(num::square(model.inverse(constant(s), constant(s), true))));
  CHECK(model.parameter_hash() == hash);
  for (const num::Parameter* p : std::as_const(model).parameters()) CHECK(p->grad.isZero(0.0));
}

TEST_CASE("every orthogonal map has orthonormal rows") {
  Rng rng(74);
  const CinnModel model = CinnModel::random(patient_plan(), small_options(), rng);
  const auto maps = model.orthogonal_maps();
  CHECK(maps.size() == 3);
  for (const Matrix& w : maps) CHECK(num::orthogonality_defect(w) <= 1e-10);
}

TEST_CASE("bidirectional losses have correct parameter gradients") {
  Rng rng(75);
  BlockOptions opt;
  opt.hidden = 4;
  opt.coupling_depth = 1;
  opt.scale_clamp = 50.0;
  CinnModel model = CinnModel::random(toy_plan(), opt, rng);
  const Transitions data = random_transitions(6, 6, rng);
  const auto params = model.parameters();
  const auto forward_loss = [&] {
    return num::mean(num::square(model.forward(constant(data.s), constant(data.a), true) - constant(data.s_next)));
  };
  const auto inverse_loss = [&] {
    return num::mean(num::square(model.inverse(constant(data.s), constant(data.s_next), true) - constant(data.a)));
  };
  CHECK(cinnrl::testing::grad_error(forward_loss, params) <= 1e-4);
  CHECK(cinnrl::testing::grad_error(inverse_loss, params) <= 1e-4);
}

TEST_CASE("masked baseline predicts and infers the right shapes") {
  Rng rng(81);
  const MaskedMlp mlp = MaskedMlp::random(13, 2, {16, 16}, rng);
  const Matrix s = normal_matrix(3, 13, rng), a = normal_matrix(3, 2, rng);
  CHECK(mlp.predict(s, a).cols() == 13);
  CHECK(mlp.infer(s, s).cols() == 2);
}
