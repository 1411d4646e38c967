#include "scgen/gail.hpp"

#include <algorithm>
#include <cmath>

#include "scgen/errors.hpp"
#include "scgen/geometry.hpp"

namespace scgen {

std::vector<std::pair<FeatureMatrix, Action>> derive_expert_actions(const Scenario& s, Role role,
                                                                    const EnvConfig& config) {
    EnvConfig cfg = config;
    cfg.forced_adversary = role;
    SimEnv env(s, cfg);
    env.set_adversary_replay(true);

    const Trajectory& traj = s.neighbors.at(role);
    double wheelbase = 0.6 * (traj.length > 0.0 ? traj.length : cfg.default_length);

    std::vector<std::pair<FeatureMatrix, Action>> pairs;
    env.reset();
    for (size_t k = 0; k + 1 < traj.samples.size(); ++k) {
        const TrajectorySample& a = traj.samples[k];
        const TrajectorySample& b = traj.samples[k + 1];
        double dt = b.time - a.time;
        Action act;
        act.accel = (b.speed - a.speed) / dt;
        double dh = wrap_angle(b.heading - a.heading);
        act.steer = a.speed > 1e-6 ? std::atan(dh * wheelbase / (a.speed * dt)) : 0.0;
        pairs.emplace_back(env.features(), clamp_action(act));
        // logged contact between replayed vehicles ends the episode early
        if (env.step(Action{}).done) break;
    }
    return pairs;
}

ExpertBuffer build_expert_buffer(const std::vector<Scenario>& catalog, const EnvConfig& config) {
    ExpertBuffer buffer;
    for (const Scenario& s : catalog) {
        Role role = config.forced_adversary ? *config.forced_adversary : choose_adversary_role(s);
        for (auto& [fm, act] : derive_expert_actions(s, role, config)) {
            buffer.states.push_back(std::move(fm));
            buffer.actions.push_back(act);
        }
    }
    return buffer;
}

BatchStats expert_action_stats(const ExpertBuffer& buffer) {
    std::vector<std::vector<double>> rows;
    rows.reserve(buffer.size());
    for (const Action& a : buffer.actions) rows.push_back({a.accel, a.steer});
    return compute_batch_stats(rows);
}

double disc_update(Network& net, const DiscBatch& batch, double lr, Adam* optimizer) {
    size_t n_expert = batch.expert_states.size();
    size_t n_gen = batch.gen_states.size();
    if (n_expert == 0 || n_gen == 0) {
        throw ValidationError("disc_update: empty batch");
    }
    if (n_expert != batch.expert_actions.size() || n_gen != batch.gen_actions.size()) {
        throw ValidationError("disc_update: ragged batch");
    }
    if (n_expert != n_gen) {
        throw ValidationError("disc_update: batch halves must be class-balanced");
    }

    double total = static_cast<double>(n_expert + n_gen);
    double loss = 0.0;
    std::vector<double> grads(net.param_count(), 0.0);
    Network::Cache cache;
    auto accumulate = [&](const FeatureMatrix& fm, const Action& a, double label) {
        double d = forward_disc(net, fm, a, &cache);
        loss += -(label * std::log(d) + (1.0 - label) * std::log(1.0 - d));
        // d(BCE)/d(logit) = d - label
        std::vector<double> g = net.backward(cache, {(d - label) / total});
        for (size_t i = 0; i < grads.size(); ++i) grads[i] += g[i];
    };
    for (size_t i = 0; i < n_expert; ++i) {
        accumulate(*batch.expert_states[i], batch.expert_actions[i], 1.0);
    }
    for (size_t i = 0; i < n_gen; ++i) {
        accumulate(*batch.gen_states[i], batch.gen_actions[i], 0.0);
    }
    loss /= total;

    if (optimizer) {
        optimizer->step(net.params(), grads);
    } else {
        for (size_t i = 0; i < grads.size(); ++i) net.params()[i] -= lr * grads[i];
    }
    return loss;
}

double disc_accuracy(const Network& net, const DiscBatch& batch) {
    size_t correct = 0;
    size_t total = 0;
    for (size_t i = 0; i < batch.expert_states.size(); ++i) {
        if (forward_disc(net, *batch.expert_states[i], batch.expert_actions[i]) > 0.5) ++correct;
        ++total;
    }
    for (size_t i = 0; i < batch.gen_states.size(); ++i) {
        if (forward_disc(net, *batch.gen_states[i], batch.gen_actions[i]) <= 0.5) ++correct;
        ++total;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double imitation_reward(double d) {
    return std::clamp(-std::log(1.0 - d), 0.0, 10.0);
}

} // namespace scgen
