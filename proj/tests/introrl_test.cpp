#include "gradcheck.hpp"

#include "cinnrl/causal/layering.hpp"
#include "cinnrl/error.hpp"
#include "cinnrl/glucosim/dataset.hpp"
#include "cinnrl/introrl/evaluate.hpp"
#include "cinnrl/introrl/train.hpp"

#include <doctest.h>

#include <set>

using namespace cinnrl;
using namespace cinnrl::introrl;
using num::constant;
using num::normal_matrix;
using num::Rng;

namespace {

cinn::CinnModel frozen_cinn(const glucosim::PatientModel& patient, std::uint64_t seed, bool fit_scaling = true) {
  const auto dag = patient.dag();
  const auto plan = causal::plan_structure(causal::topo_layering(dag), dag);
  cinn::BlockOptions opt;
  opt.hidden = 8;
  opt.init_gain = 0.1;
  Rng rng(seed);
  cinn::CinnModel model = cinn::CinnModel::random(plan, opt, rng);
  if (fit_scaling) {
    glucosim::GenConfig gen;
    gen.n_traj = 1;
    gen.therapy = patient.nominal_therapy();
    model.scaling = cinn::Scaling::fit(glucosim::gen_dataset(patient, glucosim::dose_policy(0), gen).data);
  }
  model.freeze();
  return model;
}

RlConfig small_rl(Variant variant, long steps) {
  RlConfig cfg;
  cfg.variant = variant;
  cfg.steps = steps;
  cfg.warmup = 50;
  cfg.batch = 16;
  cfg.hidden = 16;
  cfg.seed = 3;
  return cfg;
}

EnvConfig short_env() {
  EnvConfig cfg;
  cfg.episode_steps = 100;
  return cfg;
}

// Batch of plausible transitions drawn from a nominal-therapy day.
Batch sample_batch(const glucosim::PatientModel& patient, const ObsEncoder& encoder, Index rows, Rng& rng) {
  glucosim::GenConfig gen;
  gen.n_traj = 1;
  gen.steps = 200;
  gen.therapy = patient.nominal_therapy();
  const auto data = glucosim::gen_dataset(patient, glucosim::dose_policy(0), gen);
  ReplayBuffer buffer(1000, encoder.dim(), 2, patient.state_dim());
  const glucosim::MealSchedule meals(gen.meals, patient.dt());
  for (Index r = 0; r < data.size(); ++r) {
    Transition t;
    t.s = data.data.s.row(r).transpose();
    t.s_next = data.data.s_next.row(r).transpose();
    t.executed = data.data.a.row(r).transpose();
    t.meal = meals.carbs_at(r);
    t.obs = encoder.encode(t.s, t.meal, static_cast<int>(r));
    t.obs_next = encoder.encode(t.s_next, meals.carbs_at(r + 1), static_cast<int>(r + 1));
    t.unit = num::uniform_matrix(2, 1, rng, -0.9, 0.9);
    t.reward = -1e-3 * static_cast<double>(r % 7);
    buffer.add(t);
  }
  return buffer.sample(rows, rng);
}

bool same_parameters(SacAgent& a, SacAgent& b) {
  const auto pa = a.policy.parameters(), pb = b.policy.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->value != pb[i]->value) return false;
  return true;
}

}  // namespace

TEST_CASE("deterministic actions repeat and stay in bounds") {
  Rng rng(1);
  const ActionBounds bounds = ActionBounds::from(EnvConfig{});
  const GaussianPolicy policy = GaussianPolicy::random(8, 16, bounds, rng);
  const Vector obs = normal_matrix(8, 1, rng);
  Rng r1(5), r2(6);
  CHECK(policy.select_action(obs, false, r1) == policy.select_action(obs, false, r2));
}

TEST_CASE("stochastic actions lie inside the bounds") {
  Rng rng(2);
  EnvConfig env;
  env.insulin_max = 3.0;
  const ActionBounds bounds = ActionBounds::from(env);
  GaussianPolicy policy = GaussianPolicy::random(4, 16, bounds, rng);
  // A wide log-std pushes samples into the tails.
  policy.trunk().layers().back().bias.value(0, 2) = 2.0;
  policy.trunk().layers().back().bias.value(0, 3) = 2.0;
  for (int i = 0; i < 10000; ++i) {
    const Vector a = policy.select_action(normal_matrix(4, 1, rng, 3.0), true, rng);
    REQUIRE(a.size() == 2);
    CHECK((a.array() >= bounds.low.array()).all());
    CHECK((a.array() <= bounds.high.array()).all());
  }
}

TEST_CASE("a zero trunk acts at the midpoint of the bounds") {
  const ActionBounds bounds = ActionBounds::from(EnvConfig{});
  const GaussianPolicy policy(num::Mlp({5, 8, 4}), bounds);
  Rng rng(3);
  CHECK(policy.select_action(normal_matrix(5, 1, rng), false, rng).isApprox(bounds.midpoint(), 1e-15));
}

TEST_CASE("executed action clips insulin and adds positive rescue carbs to the meal") {
  Vector a(2);
  a << -0.5, -1.0;
  CHECK(GlucoseEnv::execute(a, 30.0) == Vector((Vector(2) << 0.0, 30.0).finished()));
  a << 0.7, 1.5;
  CHECK(GlucoseEnv::execute(a, 10.0) == Vector((Vector(2) << 0.7, 11.5).finished()));
}

TEST_CASE("intrinsic reward is the scaled squared prediction error") {
  const auto patient = glucosim::PatientModel::toy();
  const cinn::CinnModel model = frozen_cinn(patient, 4, false);
  Rng rng(4);
  const Vector s = normal_matrix(6, 1, rng), executed = normal_matrix(2, 1, rng);
  const Vector predicted = model.forward_predict(s.transpose(), executed.transpose()).transpose();
  CHECK(intrinsic_reward(model, s, executed, predicted, 1.0, Variant::sac_cinn) == doctest::Approx(0.0));
  CHECK(intrinsic_reward(model, s, executed, predicted, 1.0, Variant::sac_icm) == doctest::Approx(0.0));
  const Vector off = predicted + Vector::Ones(6);
  CHECK(intrinsic_reward(model, s, executed, off, 1.0, Variant::sac_cinn) == doctest::Approx(-3.0).epsilon(1e-9));
  CHECK(intrinsic_reward(model, s, executed, off, 1.0, Variant::sac_icm) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(intrinsic_reward(model, s, executed, off, 2.0, Variant::sac_cinn) == doctest::Approx(-6.0).epsilon(1e-9));
  CHECK(intrinsic_reward(model, s, executed, off, 1.0, Variant::sac) == 0.0);
}

TEST_CASE("L_I vanishes when the policy acts as the model infers") {
  const auto patient = glucosim::PatientModel::ode();
  const cinn::CinnModel model = frozen_cinn(patient, 5);
  const ObsEncoder encoder = ObsEncoder::fit(patient, EnvConfig{});
  Rng rng(5);
  Batch batch = sample_batch(patient, encoder, 8, rng);
  const ActionBounds bounds = ActionBounds::from(EnvConfig{});
  const GaussianPolicy policy(num::Mlp({encoder.dim(), 8, 4}), bounds);
  // The zero policy commands the midpoint; its target is what F predicts for it.
  const Matrix executed =
      executed_action(constant(Matrix::Zero(batch.size(), 2)), bounds, batch.meal).value();
  const Matrix target = model.forward_predict(batch.s, executed);
  const auto terms = introspection_terms(model, batch, policy, constant(Matrix::Zero(batch.size(), 2)), target, false);
  CHECK(terms.l_i.scalar() <= 1e-12);
}

TEST_CASE("L_I and L_F gradients with respect to the policy match finite differences") {
  const auto patient = glucosim::PatientModel::ode();
  const cinn::CinnModel model = frozen_cinn(patient, 6);
  const ObsEncoder encoder = ObsEncoder::fit(patient, EnvConfig{});
  Rng rng(6);
  const Batch batch = sample_batch(patient, encoder, 6, rng);
  const ActionBounds bounds = ActionBounds::from(EnvConfig{});
  GaussianPolicy policy = GaussianPolicy::random(encoder.dim(), 4, bounds, rng);
  const Matrix noise = normal_matrix(batch.size(), 2, rng);
  const auto params = policy.parameters();
  const auto l_i = [&] {
    const Var unit = policy.sample(constant(batch.obs), noise, true).unit;
    return introspection_terms(model, batch, policy, unit, batch.s_next, true).l_i;
  };
  const auto l_f = [&] {
    const Var unit = policy.sample(constant(batch.obs), noise, true).unit;
    return introspection_terms(model, batch, policy, unit, batch.s_next, true).l_f;
  };
  CHECK(cinnrl::testing::grad_error(l_i, params) <= 1e-3);
  CHECK(cinnrl::testing::grad_error(l_f, params) <= 1e-3);
}

TEST_CASE("an update step leaves the frozen model untouched") {
  const auto patient = glucosim::PatientModel::ode();
  const cinn::CinnModel model = frozen_cinn(patient, 7);
  const ObsEncoder encoder = ObsEncoder::fit(patient, EnvConfig{});
  Rng rng(7);
  const Batch batch = sample_batch(patient, encoder, 16, rng);
  Rng agent_rng(8);
  SacAgent agent(encoder.dim(), ActionBounds::from(EnvConfig{}), small_rl(Variant::sac_cinn, 0), agent_rng);
  const std::string hash = model.parameter_hash();
  const auto report = sac_update(agent, batch, &model, rng);
  CHECK(report.l_i > 0.0);
  CHECK(report.l_f > 0.0);
  CHECK(model.parameter_hash() == hash);
}

TEST_CASE("beta at either end makes the other term inert") {
  const auto patient = glucosim::PatientModel::ode();
  const cinn::CinnModel model = frozen_cinn(patient, 9);
  const ObsEncoder encoder = ObsEncoder::fit(patient, EnvConfig{});
  Rng data_rng(9);
  const Batch batch = sample_batch(patient, encoder, 16, data_rng);
  const ActionBounds bounds = ActionBounds::from(EnvConfig{});

  const auto run = [&](double beta, const Batch& b, const Matrix* target) {
    RlConfig cfg = small_rl(Variant::sac_cinn, 0);
    cfg.beta = beta;
    Rng agent_rng(10), update_rng(11);
    auto agent = std::make_unique<SacAgent>(encoder.dim(), bounds, cfg, agent_rng);
    sac_update(*agent, b, &model, update_rng, target);
    return agent;
  };

  SUBCASE("beta = 1 ignores the counterfactual target") {
    const Matrix other = batch.s_next.array() + 15.0;
    auto a = run(1.0, batch, nullptr);
    auto b = run(1.0, batch, &other);
    CHECK(same_parameters(*a, *b));
    auto c = run(0.5, batch, &other);
    CHECK_FALSE(same_parameters(*a, *c));
  }
  SUBCASE("beta = 0 ignores the forward prediction error") {
    Batch shifted = batch;
    shifted.s_next.array() += 15.0;
    auto a = run(0.0, batch, &batch.s_next);
    auto b = run(0.0, shifted, &batch.s_next);
    CHECK(same_parameters(*a, *b));
    auto c = run(0.5, shifted, &batch.s_next);
    auto d = run(0.5, batch, &batch.s_next);
    CHECK_FALSE(same_parameters(*c, *d));
  }
}

TEST_CASE("plain sac matches sac_cinn without introspection terms") {
  const auto patient = glucosim::PatientModel::ode();
  const cinn::CinnModel model = frozen_cinn(patient, 12);
  const ObsEncoder encoder = ObsEncoder::fit(patient, EnvConfig{});
  Rng data_rng(12);
  const Batch batch = sample_batch(patient, encoder, 16, data_rng);
  const auto run = [&](Variant v, bool introspection) {
    RlConfig cfg = small_rl(v, 0);
    cfg.introspection = introspection;
    Rng agent_rng(13), update_rng(14);
    auto agent = std::make_unique<SacAgent>(encoder.dim(), ActionBounds::from(EnvConfig{}), cfg, agent_rng);
    for (int i = 0; i < 3; ++i) sac_update(*agent, batch, &model, update_rng);
    return agent;
  };
  auto plain = run(Variant::sac, true);
  auto disabled = run(Variant::sac_cinn, false);
  CHECK(same_parameters(*plain, *disabled));
  CHECK(plain->q1.layers()[0].weight.value == disabled->q1.layers()[0].weight.value);
  CHECK(plain->log_alpha.value == disabled->log_alpha.value);
}

TEST_CASE("zero training steps record one episode of the untrained policy") {
  const auto patient = glucosim::PatientModel::ode();
  const ObsEncoder encoder = ObsEncoder::fit(patient, short_env());
  GlucoseEnv env(patient, short_env(), 1);
  Rng rng(15);
  SacAgent agent(encoder.dim(), ActionBounds::from(short_env()), small_rl(Variant::sac, 0), rng);
  const RlResult r = train_rl(agent, env, encoder, nullptr);
  CHECK(r.curve.size() == 1);
  CHECK(r.updates == 0);
  CHECK(r.trace.size() == 100);
  CHECK(r.curve.front().cum_reward <= 0.0);
}

TEST_CASE("reported rewards exclude the intrinsic term") {
  const auto patient = glucosim::PatientModel::ode();
  const cinn::CinnModel model = frozen_cinn(patient, 16);
  const ObsEncoder encoder = ObsEncoder::fit(patient, short_env());
  const auto run = [&](double eta) {
    GlucoseEnv env(patient, short_env(), 2);
    RlConfig cfg = small_rl(Variant::sac_cinn, 0);
    cfg.eta = eta;
    Rng rng(17);
    SacAgent agent(encoder.dim(), ActionBounds::from(short_env()), cfg, rng);
    return train_rl(agent, env, encoder, &model).curve.front().cum_reward;
  };
  CHECK(run(1.0) == run(7.0));
}

TEST_CASE("training twice with one seed gives identical curves and keeps the model frozen") {
  const auto patient = glucosim::PatientModel::ode();
  const cinn::CinnModel model = frozen_cinn(patient, 18);
  const ObsEncoder encoder = ObsEncoder::fit(patient, short_env());
  const auto run = [&] {
    GlucoseEnv env(patient, short_env(), 4);
    Rng rng(19);
    SacAgent agent(encoder.dim(), ActionBounds::from(short_env()), small_rl(Variant::sac_cinn, 300), rng);
    return train_rl(agent, env, encoder, &model);
  };
  const RlResult a = run(), b = run();
  REQUIRE(a.curve.size() == 3);
  REQUIRE(b.curve.size() == 3);
  for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].cum_reward == b.curve[i].cum_reward);
  CHECK(a.updates == 300 - 50 + 1);
  CHECK(a.cinn_hash_before == a.cinn_hash_after);
  CHECK(a.cinn_hash_before == model.parameter_hash());
}

TEST_CASE("variants that read the model refuse to run without a frozen one") {
  const auto patient = glucosim::PatientModel::ode();
  const ObsEncoder encoder = ObsEncoder::fit(patient, short_env());
  GlucoseEnv env(patient, short_env(), 1);
  Rng rng(20);
  SacAgent agent(encoder.dim(), ActionBounds::from(short_env()), small_rl(Variant::sac_icm, 10), rng);
  CHECK_THROWS(train_rl(agent, env, encoder, nullptr));
  const auto dag = patient.dag();
  Rng model_rng(21);
  const cinn::CinnModel thawed =
      cinn::CinnModel::random(causal::plan_structure(causal::topo_layering(dag), dag), cinn::BlockOptions{}, model_rng);
  CHECK_THROWS(train_rl(agent, env, encoder, &thawed));
}

TEST_CASE("rl configuration is validated") {
  RlConfig cfg;
  cfg.beta = 1.5;
  CHECK_THROWS(validate(cfg));
  cfg = RlConfig{};
  cfg.eta = 0.0;
  CHECK_THROWS(validate(cfg));
  cfg = RlConfig{};
  cfg.lambda = -1.0;
  CHECK_THROWS(validate(cfg));
  CHECK_THROWS_AS(parse_variant("ppo"), ParseError);
  CHECK(parse_variant("sac_cinn") == Variant::sac_cinn);
}

TEST_CASE("constant in-range glucose is fully in range with no events") {
  const GlycemicMetrics m = glycemic_metrics(std::vector<double>(50, 120.0));
  CHECK(m.time_in_range == 100.0);
  CHECK(m.hypo_events == 0);
  CHECK(m.hyper_events == 0);
}

TEST_CASE("range entries are counted once per excursion") {
  const GlycemicMetrics m = glycemic_metrics({60.0, 190.0, 100.0});
  CHECK(m.hypo_events == 1);
  CHECK(m.hyper_events == 1);
  CHECK(m.time_in_range == doctest::Approx(100.0 / 3.0));
  const GlycemicMetrics long_hypo = glycemic_metrics({100.0, 60.0, 50.0, 65.0, 100.0, 60.0});
  CHECK(long_hypo.hypo_events == 2);
  CHECK(glycemic_metrics({70.0, 180.0}).time_in_range == 100.0);
}

TEST_CASE("deterministic evaluation repeats exactly") {
  const auto patient = glucosim::PatientModel::ode();
  const ObsEncoder encoder = ObsEncoder::fit(patient, short_env());
  Rng rng(22);
  const GaussianPolicy policy = GaussianPolicy::random(encoder.dim(), 16, ActionBounds::from(short_env()), rng);
  const auto run = [&] {
    GlucoseEnv env(patient, short_env(), 9);
    std::vector<TraceRow> trace;
    const GlycemicMetrics m = evaluate(policy, env, encoder, 2, &trace);
    return std::make_pair(m, trace);
  };
  const auto [a, ta] = run();
  const auto [b, tb] = run();
  CHECK(a.time_in_range == b.time_in_range);
  CHECK(a.hypo_events == b.hypo_events);
  CHECK(a.hyper_events == b.hyper_events);
  CHECK(a.mean_return == b.mean_return);
  CHECK(a.episodes == 2);
  REQUIRE(ta.size() == 100);
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].glucose == tb[i].glucose);
}

TEST_CASE("replay sampling is seeded, unique within a batch and FIFO") {
  ReplayBuffer buffer(5, 1, 2, 1);
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.obs = Vector::Constant(1, i);
    t.obs_next = t.obs;
    t.unit = Vector::Zero(2);
    t.s = t.obs;
    t.s_next = t.obs;
    t.executed = Vector::Zero(2);
    t.reward = i;
    buffer.add(t);
  }
  CHECK(buffer.size() == 5);
  CHECK(buffer.at(0).reward == 3.0);
  CHECK(buffer.at(4).reward == 7.0);
  Rng r1(30), r2(30);
  for (int i = 0; i < 20; ++i) {
    const Batch a = buffer.sample(4, r1), b = buffer.sample(4, r2);
    CHECK(a.indices == b.indices);
    CHECK(std::set<Index>(a.indices.begin(), a.indices.end()).size() == 4);
    CHECK(a.reward.minCoeff() >= 3.0);
  }
  CHECK_THROWS(buffer.sample(6, r1));
}
