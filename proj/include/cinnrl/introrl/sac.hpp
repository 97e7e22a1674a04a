#pragma once

#include "cinnrl/cinn/model.hpp"
#include "cinnrl/introrl/policy.hpp"
#include "cinnrl/introrl/replay.hpp"
#include "cinnrl/numkit/adam.hpp"

#include <cstdint>
#include <string>

namespace cinnrl::introrl {

enum class Variant { sac, sac_icm, sac_cinn };

const char* to_string(Variant v);
Variant parse_variant(const std::string& text);

struct RlConfig {
  Variant variant = Variant::sac;
  double eta = 1.0;     // intrinsic reward scale
  double beta = 0.5;    // mix between the introspection terms
  double lambda = 1.0;  // weight of the SAC actor loss
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  Index batch = 64;
  Index hidden = 64;
  long warmup = 1000;
  long steps = 0;
  std::uint64_t seed = 0;
  Index replay_capacity = 100000;
  double init_alpha = 0.2;
  double target_entropy = -2.0;
  /// Multiplies the environment reward before it enters the critic targets.
  double reward_scale = 1e-4;
  /// Replace the observed next glucose by its value clamped into the target
  /// range when forming the counterfactual target of L_I.
  bool clamped_target = false;
  /// Adds (1 - beta) L_I + beta L_F to the policy loss (sac_cinn only).
  bool introspection = true;
};

void validate(const RlConfig& cfg);

/// Policy, twin critics with Polyak targets and a tuned temperature. Holds raw parameter
/// pointers in its optimizers, so it is neither copyable nor movable.
class SacAgent {
 public:
  SacAgent(Index obs_dim, const ActionBounds& bounds, const RlConfig& cfg, num::Rng& rng);
  SacAgent(const SacAgent&) = delete;
  SacAgent& operator=(const SacAgent&) = delete;

  double alpha() const;

  GaussianPolicy policy;
  num::Mlp q1, q2, q1_target, q2_target;
  num::Parameter log_alpha;
  num::Adam policy_opt, critic_opt, alpha_opt;
  RlConfig cfg;
};

/// -(eta/2)||s' - F(s, a)||^2 for sac_cinn, +(eta/2)||...||^2 for sac_icm, 0
/// for sac. Errors are measured in the model's normalized state space.
double intrinsic_reward(const cinn::CinnModel& model, const Vector& s, const Vector& executed,
                        const Vector& s_next, double eta, Variant variant);

struct IntrospectionTerms {
  Var l_i;
  Var l_f;
};

/// L_I = mean ||I(s, s') - pi_det(s)||^2 and L_F = mean ||s' - F(s, pi(s))||^2,
/// both in the model's normalized coordinates, with policy actions mapped to
/// executed (insulin, meal + rescue). `unit_sample` is the reparameterized
/// squashed action used for L_F. Gradients reach the policy only.
IntrospectionTerms introspection_terms(const cinn::CinnModel& model, const Batch& batch,
                                       const GaussianPolicy& policy, const Var& unit_sample,
                                       const Matrix& counterfactual_target, bool trainable);

/// Executed (insulin, carbs) for squashed policy actions and scheduled meals.
Var executed_action(const Var& unit, const ActionBounds& bounds, const Vector& meal);

struct UpdateReport {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double l_i = 0.0;
  double l_f = 0.0;
  double alpha = 0.0;
};

/// One critic, actor, temperature and target update on a batch. `target`
/// (optional) replaces s' as the counterfactual target of L_I.
UpdateReport sac_update(SacAgent& agent, const Batch& batch, const cinn::CinnModel* model, num::Rng& rng,
                        const Matrix* target = nullptr);

}  // namespace cinnrl::introrl
