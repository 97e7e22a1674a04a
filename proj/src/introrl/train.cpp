#include "cinnrl/introrl/train.hpp"

#include "cinnrl/error.hpp"

#include <algorithm>
#include <random>

namespace cinnrl::introrl {

namespace {

Matrix clamped_glucose_target(const Matrix& s_next) {
  Matrix out = s_next;
  out.col(0) = out.col(0).cwiseMax(kRangeLow).cwiseMin(kRangeHigh);
  return out;
}

}  // namespace

RlResult train_rl(SacAgent& agent, GlucoseEnv& env, const ObsEncoder& encoder, const cinn::CinnModel* model,
                  const std::function<void(const EpisodeRecord&)>& on_episode) {
  const RlConfig& cfg = agent.cfg;
  validate(cfg);
  if (cfg.variant != Variant::sac) {
    if (model == nullptr) throw Error(std::string("train_rl: ") + to_string(cfg.variant) + " needs a CINN");
    if (!model->frozen()) throw Error("train_rl: the CINN must be frozen");
  }
  RlResult result;
  if (model) result.cinn_hash_before = model->parameter_hash();

  num::Rng act_rng(num::derive_seed(cfg.seed, "act"));
  num::Rng replay_rng(num::derive_seed(cfg.seed, "replay"));
  num::Rng update_rng(num::derive_seed(cfg.seed, "update"));
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  const Index k = agent.policy.action_dim();
  ReplayBuffer replay(cfg.replay_capacity, encoder.dim(), k, env.model().state_dim());
  const bool baseline = cfg.steps == 0;
  const long total = baseline ? env.config().episode_steps : cfg.steps;
  const Index warm = std::max<Index>(cfg.batch, cfg.warmup);

  env.reset();
  Vector obs = encoder.encode(env);
  EpisodeRecord ep;
  std::vector<double> bg;
  for (long step = 0; step < total; ++step) {
    Vector unit(k);
    if (!baseline && step < cfg.warmup) {
      for (Index j = 0; j < k; ++j) unit(j) = uniform(act_rng);
    } else {
      unit = agent.policy.select_unit(obs, true, act_rng);
    }
    Transition tr;
    tr.s = env.state();
    tr.meal = env.meal_now();
    const int t = env.t();
    const StepResult r = env.step(agent.policy.bounds().scale(unit));
    const double r_i = model ? intrinsic_reward(*model, tr.s, r.executed, r.s_next, cfg.eta, cfg.variant) : 0.0;
    tr.obs = obs;
    tr.unit = unit;
    tr.reward = cfg.reward_scale * r.reward + r_i;
    tr.obs_next = encoder.encode(env);
    tr.s_next = r.s_next;
    tr.executed = r.executed;
    replay.add(tr);
    obs = tr.obs_next;

    ep.cum_reward += r.reward;
    ep.clamp_events += r.clamped ? 1 : 0;
    bg.push_back(r.glucose);
    result.trace.push_back({t, r.glucose, r.executed(0), r.executed(1)});

    if (!baseline && replay.size() >= warm) {
      const Batch batch = replay.sample(cfg.batch, replay_rng);
      if (cfg.clamped_target) {
        const Matrix target = clamped_glucose_target(batch.s_next);
        sac_update(agent, batch, model, update_rng, &target);
      } else {
        sac_update(agent, batch, model, update_rng);
      }
      ++result.updates;
    }

    if (r.done) {
      ep.time_in_range = glycemic_metrics(bg).time_in_range;
      result.curve.push_back(ep);
      result.clamp_events += ep.clamp_events;
      if (on_episode) on_episode(ep);
      ep = EpisodeRecord{};
      ep.episode = static_cast<int>(result.curve.size());
      bg.clear();
      if (step + 1 < total) {
        result.trace.clear();
        env.reset();
        obs = encoder.encode(env);
      }
    }
  }
  if (model) result.cinn_hash_after = model->parameter_hash();
  return result;
}

}  // namespace cinnrl::introrl
