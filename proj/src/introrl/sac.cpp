#include "cinnrl/introrl/sac.hpp"

#include "cinnrl/error.hpp"

#include <cmath>

namespace cinnrl::introrl {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::sac: return "sac";
    case Variant::sac_icm: return "sac_icm";
    case Variant::sac_cinn: return "sac_cinn";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  if (text == "sac") return Variant::sac;
  if (text == "sac_icm") return Variant::sac_icm;
  if (text == "sac_cinn") return Variant::sac_cinn;
  throw ParseError("unknown variant '" + text + "' (expected sac, sac_icm or sac_cinn)");
}

void validate(const RlConfig& cfg) {
  if (cfg.beta < 0.0 || cfg.beta > 1.0) throw Error("rl: beta must be in [0, 1]");
  if (!(cfg.eta > 0.0)) throw Error("rl: eta must be > 0");
  if (!(cfg.lambda > 0.0)) throw Error("rl: lambda must be > 0");
  if (cfg.batch < 1) throw Error("rl: batch must be >= 1");
  if (cfg.steps < 0) throw Error("rl: steps must be >= 0");
}

namespace {

num::Mlp critic(Index in, Index hidden, num::Rng& rng) {
  return num::Mlp::random({in, hidden, hidden, 1}, rng);
}

Var q_min(const SacAgent& agent, const Var& obs, const Var& unit, bool target) {
  const Var x = num::hconcat({obs, unit});
  const num::Mlp& a = target ? agent.q1_target : agent.q1;
  const num::Mlp& b = target ? agent.q2_target : agent.q2;
  return num::minimum(a.forward(x, false), b.forward(x, false));
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("sac_update: non-finite ") + what);
}

}  // namespace

SacAgent::SacAgent(Index obs_dim, const ActionBounds& bounds, const RlConfig& config, num::Rng& rng)
    : policy(GaussianPolicy::random(obs_dim, config.hidden, bounds, rng)),
      q1(critic(obs_dim + bounds.low.size(), config.hidden, rng)),
      q2(critic(obs_dim + bounds.low.size(), config.hidden, rng)),
      q1_target(q1),
      q2_target(q2),
      log_alpha(Matrix::Constant(1, 1, std::log(config.init_alpha))),
      cfg(config) {
  validate(cfg);
  const num::AdamConfig opt{.lr = cfg.lr};
  policy_opt = num::Adam(policy.parameters(), opt);
  auto qp = q1.parameters();
  for (num::Parameter* p : q2.parameters()) qp.push_back(p);
  critic_opt = num::Adam(qp, opt);
  alpha_opt = num::Adam({&log_alpha}, opt);
}

double SacAgent::alpha() const { return std::exp(log_alpha.value(0, 0)); }

double intrinsic_reward(const cinn::CinnModel& model, const Vector& s, const Vector& executed, const Vector& s_next,
                        double eta, Variant variant) {
  if (variant == Variant::sac) return 0.0;
  const Matrix pred = model.scaling.state.apply(model.forward_predict(s.transpose(), executed.transpose()));
  const double err = (model.scaling.state.apply(Matrix(s_next.transpose())) - pred).squaredNorm();
  const double mag = 0.5 * eta * err;
  return variant == Variant::sac_cinn ? -mag : mag;
}

Var executed_action(const Var& unit, const ActionBounds& bounds, const Vector& meal) {
  const Var a = scale_to_bounds(unit, bounds);
  const Var insulin = num::leaky_relu(num::columns(a, 0, 1), 0.0);
  const Var carbs = num::leaky_relu(num::columns(a, 1, 1), 0.0) + num::constant(meal);
  return num::hconcat({insulin, carbs});
}

IntrospectionTerms introspection_terms(const cinn::CinnModel& model, const Batch& batch, const GaussianPolicy& policy,
                                       const Var& unit_sample, const Matrix& counterfactual_target, bool trainable) {
  const cinn::Scaling& sc = model.scaling;
  const Var s = num::constant(sc.state.apply(batch.s));
  const Matrix inferred =
      model.inverse(s, num::constant(sc.state.apply(counterfactual_target)), false).value();

  const Var det = policy.deterministic(num::constant(batch.obs), trainable);
  const Var det_n = sc.action.apply(executed_action(det, policy.bounds(), batch.meal));
  const Var l_i = num::mean(num::square(det_n - num::constant(inferred)));

  const Var sample_n = sc.action.apply(executed_action(unit_sample, policy.bounds(), batch.meal));
  const Var predicted = model.forward(s, sample_n, false);
  const Var l_f = num::mean(num::square(predicted - num::constant(sc.state.apply(batch.s_next))));
  return {l_i, l_f};
}

UpdateReport sac_update(SacAgent& agent, const Batch& batch, const cinn::CinnModel* model, num::Rng& rng,
                        const Matrix* target) {
  const RlConfig& cfg = agent.cfg;
  const Index k = agent.policy.action_dim();
  const double alpha = agent.alpha();
  UpdateReport report;
  report.alpha = alpha;

  // Critics.
  {
    const Var obs_next = num::constant(batch.obs_next);
    const PolicySample next = agent.policy.sample(obs_next, num::normal_matrix(batch.size(), k, rng), false);
    const Matrix soft = q_min(agent, obs_next, next.unit, true).value() - alpha * next.log_prob.value();
    const Matrix y = batch.reward + cfg.gamma * batch.not_done.cwiseProduct(soft.col(0));
    const Var x = num::constant([&] {
      Matrix m(batch.size(), batch.obs.cols() + k);
      m << batch.obs, batch.unit;
      return m;
    }());
    const Var yv = num::constant(y);
    const Var loss = num::mean(num::square(agent.q1.forward(x, true) - yv)) +
                     num::mean(num::square(agent.q2.forward(x, true) - yv));
    report.critic_loss = loss.scalar();
    check_finite(report.critic_loss, "critic loss");
    num::backward(loss);
    agent.critic_opt.step();
  }

  // Actor.
  Matrix log_prob;
  {
    const Var obs = num::constant(batch.obs);
    const PolicySample cur = agent.policy.sample(obs, num::normal_matrix(batch.size(), k, rng), true);
    const Var actor = num::mean(alpha * cur.log_prob - q_min(agent, obs, cur.unit, false));
    report.actor_loss = actor.scalar();
    Var loss = cfg.lambda * actor;
    if (cfg.variant == Variant::sac_cinn && cfg.introspection) {
      if (model == nullptr) throw Error("sac_update: sac_cinn needs a CINN");
      const IntrospectionTerms terms =
          introspection_terms(*model, batch, agent.policy, cur.unit, target ? *target : batch.s_next, true);
      report.l_i = terms.l_i.scalar();
      report.l_f = terms.l_f.scalar();
      loss = loss + (1.0 - cfg.beta) * terms.l_i + cfg.beta * terms.l_f;
    }
    check_finite(loss.scalar(), "policy loss");
    num::backward(loss);
    agent.policy_opt.step();
    log_prob = cur.log_prob.value();
  }

  // Temperature: d/d(log alpha) of -log_alpha * mean(log_prob + target_entropy).
  agent.log_alpha.grad = Matrix::Constant(1, 1, -(log_prob.array() + cfg.target_entropy).mean());
  agent.alpha_opt.step();

  num::polyak_update(agent.q1_target, agent.q1, cfg.tau);
  num::polyak_update(agent.q2_target, agent.q2, cfg.tau);
  return report;
}

}  // namespace cinnrl::introrl
