#pragma once

#include <vector>

#include "scgen/policy_core.hpp"
#include "scgen/reward_engine.hpp"
#include "scgen/scenario.hpp"
#include "scgen/sim_env.hpp"

namespace scgen {

class Rng;

// Expert state-action pairs recovered from logged scenarios via the inverse
// bicycle model.
struct ExpertBuffer {
    std::vector<FeatureMatrix> states;
    std::vector<Action> actions;

    size_t size() const { return actions.size(); }
    bool empty() const { return actions.empty(); }
};

// Actions that reproduce a windowed trajectory through kinematic_update:
// accel from speed differences, steer from heading differences inverted
// through the bicycle model (steer = 0 on near-zero speed), clamped to
// bounds. States are the per-step feature matrices with the given role as
// the observation frame.
std::vector<std::pair<FeatureMatrix, Action>> derive_expert_actions(const Scenario& s, Role role,
                                                                    const EnvConfig& config);

// Every scenario contributes pairs in its default adversary role.
ExpertBuffer build_expert_buffer(const std::vector<Scenario>& catalog, const EnvConfig& config);

// Batch action stats over the buffer (for distribution-distance rewards).
BatchStats expert_action_stats(const ExpertBuffer& buffer);

struct DiscBatch {
    std::vector<const FeatureMatrix*> expert_states;
    std::vector<Action> expert_actions;
    std::vector<const FeatureMatrix*> gen_states;
    std::vector<Action> gen_actions;

    size_t size() const { return expert_actions.size(); }
};

// One binary-cross-entropy step on the class-balanced batch; returns the
// pre-step loss. With a null optimizer this is a plain gradient step of size
// lr; the trainer passes its adaptive-moment optimizer instead.
double disc_update(Network& net, const DiscBatch& batch, double lr, Adam* optimizer = nullptr);

// Mean discriminator accuracy on the batch at threshold 0.5.
double disc_accuracy(const Network& net, const DiscBatch& batch);

// GAIL reward surrogate: -ln(1 - d), clipped to [0, 10].
double imitation_reward(double d);

} // namespace scgen
