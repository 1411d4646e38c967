#include "scgen/scppo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "scgen/errors.hpp"
#include "scgen/manifest.hpp"
#include "scgen/num_format.hpp"
#include "scgen/reward_engine.hpp"
#include "scgen/rng.hpp"
#include "scgen/sim_env.hpp"

namespace scgen {

using nlohmann::ordered_json;

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<uint8_t>& dones, double bootstrap_value, double gamma,
                      double lambda) {
    size_t n = rewards.size();
    if (n == 0) throw ValidationError("advantage estimation over an empty segment");
    if (values.size() != n || dones.size() != n)
        throw ValidationError("advantage estimation inputs have mismatched lengths");

    GaeResult out;
    out.advantages.resize(n);
    out.returns.resize(n);
    double next_adv = 0.0;
    double next_value = bootstrap_value;
    for (size_t i = n; i-- > 0;) {
        double nv = dones[i] ? 0.0 : next_value;
        double na = dones[i] ? 0.0 : next_adv;
        double delta = rewards[i] + gamma * nv - values[i];
        double adv = delta + gamma * lambda * na;
        out.advantages[i] = adv;
        out.returns[i] = adv + values[i];
        next_adv = adv;
        next_value = values[i];
    }
    return out;
}

LeakyBounds leaky_bounds(double ratio, double eps, double alpha) {
    return {alpha * ratio + (1.0 - alpha) * (1.0 - eps),
            alpha * ratio + (1.0 - alpha) * (1.0 + eps)};
}

LeakySurrogate leaky_surrogate(double ratio, double advantage, double eps, double alpha) {
    LeakyBounds b = leaky_bounds(ratio, eps, alpha);
    double clipped, d_clipped;
    if (ratio < b.lower) {
        clipped = b.lower;
        d_clipped = alpha;
    } else if (ratio > b.upper) {
        clipped = b.upper;
        d_clipped = alpha;
    } else {
        clipped = ratio;
        d_clipped = 1.0;
    }
    double unclipped_term = ratio * advantage;
    double clipped_term = clipped * advantage;
    if (unclipped_term <= clipped_term) return {unclipped_term, advantage};
    return {clipped_term, d_clipped * advantage};
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("replay capacity must be positive");
}

void ReplayBuffer::push(FeatureMatrix state, Action action) {
    if (items_.size() < capacity_) {
        items_.emplace_back(std::move(state), action);
    } else {
        items_[next_] = {std::move(state), action};
    }
    next_ = (next_ + 1) % capacity_;
}

const std::pair<FeatureMatrix, Action>& ReplayBuffer::at(size_t i) const {
    if (i >= items_.size()) throw ValidationError("replay index out of range");
    return items_[i];
}

UpdateStats ppo_update(Network& policy, Network& value, const RolloutBatch& batch,
                       const TrainerConfig& cfg, Adam& policy_opt, Adam& value_opt, Rng& rng) {
    size_t n = batch.steps.size();
    if (n == 0) throw ValidationError("policy update on an empty batch");
    if (batch.advantages.size() != n || batch.returns.size() != n)
        throw ValidationError("rollout batch arrays have mismatched lengths");

    size_t out_dim = policy.layout().out_dim;
    size_t ls_off = policy.log_std_offset();

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    double ploss_sum = 0.0, vloss_sum = 0.0, ratio_sum = 0.0, ent_sum = 0.0;
    size_t saturated = 0, processed = 0;

    std::vector<double> pg(policy.param_count());
    std::vector<double> vg(value.param_count());
    std::vector<double> zv(out_dim);
    std::vector<double> d_out(out_dim);

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < n; start += cfg.minibatch) {
            size_t end = std::min(n, start + cfg.minibatch);
            double m = static_cast<double>(end - start);
            std::fill(pg.begin(), pg.end(), 0.0);
            std::fill(vg.begin(), vg.end(), 0.0);

            for (size_t bi = start; bi < end; ++bi) {
                size_t idx = order[bi];
                const Transition& t = batch.steps[idx];
                double adv = batch.advantages[idx];
                double ret = batch.returns[idx];
                for (size_t d = 0; d < out_dim; ++d) zv[d] = t.z[d];

                Network::Cache pc;
                ActionDistribution dist = forward_policy(policy, t.state, &pc);
                double logp = gaussian_log_prob(dist, zv);
                double ratio = std::exp(logp - t.log_prob);
                LeakySurrogate surr = leaky_surrogate(ratio, adv, cfg.eps_clip, cfg.alpha);
                double ent = dist_entropy(dist);

                Network::Cache vc;
                double v = forward_value(value, t.state, &vc);
                double verr = v - ret;

                double sample_loss =
                    -surr.value - cfg.entropy_coef * ent + cfg.value_coef * verr * verr;
                if (!std::isfinite(sample_loss))
                    throw ValidationError(
                        "non-finite loss in the policy update; check reward scales and "
                        "learning rates");

                double dl_dr = -surr.d_ratio;
                for (size_t d = 0; d < out_dim; ++d) {
                    double sigma = std::exp(dist.log_std[d]);
                    double d_mu = (zv[d] - dist.mean[d]) / (sigma * sigma);
                    d_out[d] = dl_dr * ratio * d_mu / m;
                }
                std::vector<double> sample_pg = policy.backward(pc, d_out);
                for (size_t d = 0; d < out_dim; ++d) {
                    size_t pi = ls_off + d;
                    double p = policy.params()[pi];
                    // the read path clamps log-std; a pinned parameter stays put
                    if (p <= ActionDistribution::kLogStdMin || p >= ActionDistribution::kLogStdMax)
                        continue;
                    double sigma = std::exp(dist.log_std[d]);
                    double u = (zv[d] - dist.mean[d]) / sigma;
                    sample_pg[pi] += (dl_dr * ratio * (u * u - 1.0) - cfg.entropy_coef) / m;
                }
                for (size_t k = 0; k < pg.size(); ++k) pg[k] += sample_pg[k];

                std::vector<double> sample_vg =
                    value.backward(vc, {2.0 * cfg.value_coef * verr / m});
                for (size_t k = 0; k < vg.size(); ++k) vg[k] += sample_vg[k];

                ploss_sum += -surr.value - cfg.entropy_coef * ent;
                vloss_sum += verr * verr;
                ratio_sum += ratio;
                ent_sum += ent;
                if (std::abs(ratio - 1.0) > cfg.eps_clip) ++saturated;
                ++processed;
            }

            clip_grad_norm(pg, cfg.grad_clip);
            clip_grad_norm(vg, cfg.grad_clip);
            policy_opt.step(policy.params(), pg);
            value_opt.step(value.params(), vg);
        }
    }

    UpdateStats stats;
    stats.policy_loss = ploss_sum / static_cast<double>(processed);
    stats.value_loss = vloss_sum / static_cast<double>(processed);
    stats.mean_ratio = ratio_sum / static_cast<double>(processed);
    stats.fraction_saturated = static_cast<double>(saturated) / static_cast<double>(processed);
    stats.entropy = ent_sum / static_cast<double>(processed);
    return stats;
}

bool apply_resets(Network& policy, Network& value, Adam& policy_opt, Adam& value_opt,
                  size_t iteration, const TrainerConfig& cfg, uint64_t base_seed) {
    if (iteration == 0 || cfg.reset_interval == 0) return false;
    if (iteration % cfg.reset_interval != 0) return false;

    uint64_t seed = base_seed + iteration;
    policy.reset_last_layers(cfg.reset_layers, seed);
    value.reset_last_layers(cfg.reset_layers, seed);
    for (size_t g = policy.layer_count() - cfg.reset_layers; g < policy.layer_count(); ++g) {
        auto [off, len] = policy.layer_span(g);
        policy_opt.zero_slice(off, len);
    }
    for (size_t g = value.layer_count() - cfg.reset_layers; g < value.layer_count(); ++g) {
        auto [off, len] = value.layer_span(g);
        value_opt.zero_slice(off, len);
    }
    return true;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    ordered_json j;
    j["format_version"] = 1;
    j["policy"] = ordered_json::parse(network_to_json(cp.policy));
    j["value"] = ordered_json::parse(network_to_json(cp.value));
    j["disc"] = ordered_json::parse(network_to_json(cp.disc));
    j["expert_stats"] = {{"mean", cp.expert_stats.mean},
                         {"var", cp.expert_stats.var},
                         {"count", cp.expert_stats.count}};
    j["config_hash"] = cp.config_hash;
    j["base_seed"] = cp.base_seed;
    write_text_atomic(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError("checkpoint " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer())
        throw ArtifactError("checkpoint " + path + " has no format_version");
    if (j["format_version"].get<int>() != 1)
        throw ArtifactError("checkpoint " + path + " has unsupported format_version");
    for (const char* key : {"policy", "value", "disc", "expert_stats", "config_hash", "base_seed"})
        if (!j.contains(key)) throw ArtifactError("checkpoint " + path + " lacks field " + key);

    try {
        const nlohmann::json& es = j["expert_stats"];
        BatchStats stats;
        stats.mean = es.at("mean").get<std::vector<double>>();
        stats.var = es.at("var").get<std::vector<double>>();
        stats.count = es.at("count").get<size_t>();
        if (stats.mean.size() != stats.var.size())
            throw ArtifactError("checkpoint expert stats are malformed");
        return Checkpoint{network_from_json(j["policy"].dump()),
                          network_from_json(j["value"].dump()),
                          network_from_json(j["disc"].dump()),
                          std::move(stats),
                          j["config_hash"].get<std::string>(),
                          j["base_seed"].get<uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError("checkpoint " + path + " is malformed: " + e.what());
    }
}

std::string metrics_csv_header() {
    return "iteration,mean_reward,mean_adv_reward,w_distance,collision_rate,"
           "fraction_saturated,reset_flag";
}

std::string metrics_csv_row(const IterationMetrics& m) {
    std::ostringstream out;
    out << m.iteration << ',' << fmt_double(m.mean_reward) << ',' << fmt_double(m.mean_adv_reward)
        << ',' << fmt_double(m.w_distance) << ',' << fmt_double(m.collision_rate) << ','
        << fmt_double(m.fraction_saturated) << ',' << (m.reset_flag ? 1 : 0);
    return out.str();
}

namespace {

// Reward components that are known at step time; the batch-wide naturalness
// term joins after collection.
struct StepPartial {
    double imit = 0.0;
    RewardBreakdown parts;
};

struct Worker {
    Rng rng{0};
    size_t cursor = 0;
    size_t stride = 1;
    std::unique_ptr<SimEnv> env;
    std::optional<double> phi_prev;
    bool need_reset = true;

    std::vector<Transition> steps;
    std::vector<StepPartial> partials;
    double bootstrap = 0.0;
    size_t episodes_ended = 0;
    size_t episodes_hit = 0;
};

void start_episode(Worker& w, const std::vector<Scenario>& catalog, const EnvConfig& env_cfg) {
    const Scenario& s = catalog[w.cursor];
    w.cursor = (w.cursor + w.stride) % catalog.size();
    w.env = std::make_unique<SimEnv>(s, env_cfg);
    const EnvState& st = w.env->reset();
    if (st.terminal)
        throw ValidationError("scenario " + s.scenario_id + " is too short to simulate");
    w.phi_prev.reset();
    w.need_reset = false;
}

void collect_steps(Worker& w, size_t quota, const std::vector<Scenario>& catalog,
                   const EnvConfig& env_cfg, const Network& policy, const Network& value,
                   const Network& disc, const RewardConfig& reward_cfg) {
    w.steps.clear();
    w.partials.clear();
    w.bootstrap = 0.0;
    w.episodes_ended = 0;
    w.episodes_hit = 0;
    if (quota == 0) return;

    SVOConfig svo_cfg = reward_cfg.svo();
    std::vector<double> zv(2);

    while (w.steps.size() < quota) {
        if (w.need_reset) start_episode(w, catalog, env_cfg);

        FeatureMatrix fm = w.env->features();
        ActionDistribution dist = forward_policy(policy, fm);
        Transition t;
        for (size_t d = 0; d < 2; ++d) {
            t.z[d] = dist.mean[d] + std::exp(dist.log_std[d]) * w.rng.normal();
            zv[d] = t.z[d];
        }
        t.action = squash_action(zv);
        t.log_prob = gaussian_log_prob(dist, zv);
        t.value = forward_value(value, fm);
        double d_prob = forward_disc(disc, fm, t.action);

        StepResult res = w.env->step(t.action);
        const EnvState& st = w.env->state();

        StepPartial sp;
        sp.imit = imitation_reward(d_prob);
        SocialUtility su = social_utility(w.env->features(), svo_cfg);
        double ue = u_ego(st, reward_cfg.v_ref);
        SvoResult sr = svo_reward(ue, su.u_sv, svo_cfg, w.phi_prev);
        w.phi_prev = sr.phi_t;
        sp.parts.r_svo = sr.r_svo;
        sp.parts.u_ego = ue;
        sp.parts.u_sv = su.u_sv;
        sp.parts.phi_t = sr.phi_t;
        sp.parts.r_dist = distance_reward(st);
        sp.parts.r_coll = collision_reward(res.collision);

        t.state = std::move(fm);
        t.done = res.done;
        w.steps.push_back(std::move(t));
        w.partials.push_back(sp);

        if (res.done) {
            w.need_reset = true;
            w.episodes_ended += 1;
            if (res.collision.adv_hit_ego) w.episodes_hit += 1;
        }
    }

    if (!w.steps.back().done) w.bootstrap = forward_value(value, w.env->features());
}

void collect_all(std::vector<Worker>& workers, const std::vector<size_t>& quotas,
                 const std::vector<Scenario>& catalog, const EnvConfig& env_cfg,
                 const Network& policy, const Network& value, const Network& disc,
                 const RewardConfig& reward_cfg) {
    if (workers.size() == 1) {
        collect_steps(workers[0], quotas[0], catalog, env_cfg, policy, value, disc, reward_cfg);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers.size());
    for (size_t w = 0; w < workers.size(); ++w) {
        threads.emplace_back([&, w] {
            try {
                collect_steps(workers[w], quotas[w], catalog, env_cfg, policy, value, disc,
                              reward_cfg);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

std::vector<size_t> split_quota(size_t total, size_t workers) {
    std::vector<size_t> quotas(workers, total / workers);
    for (size_t w = 0; w < total % workers; ++w) quotas[w] += 1;
    return quotas;
}

DiscBatch sample_disc_batch(const ExpertBuffer& expert, const ReplayBuffer& replay, size_t half,
                            Rng& rng) {
    size_t n = std::min({half, expert.size(), replay.size()});
    DiscBatch batch;
    for (size_t i = 0; i < n; ++i) {
        size_t ei = rng.uniform_int(0, expert.size() - 1);
        batch.expert_states.push_back(&expert.states[ei]);
        batch.expert_actions.push_back(expert.actions[ei]);
        size_t gi = rng.uniform_int(0, replay.size() - 1);
        const auto& item = replay.at(gi);
        batch.gen_states.push_back(&item.first);
        batch.gen_actions.push_back(item.second);
    }
    return batch;
}

} // namespace

TrainResult train(const RunConfig& cfg, const std::vector<Scenario>& catalog, const LaneMap* map,
                  const std::string& out_dir) {
    const TrainerConfig& tc = cfg.trainer;
    validate_trainer_config(tc);
    if (catalog.empty()) throw ValidationError("training requires a non-empty scenario catalog");
    if (tc.workers > tc.batch_ppo)
        throw ConfigError("trainer.workers", "must not exceed batch_ppo");

    EnvConfig env_cfg;
    env_cfg.max_vehicles = cfg.network.max_vehicles;
    env_cfg.default_length = cfg.env.default_length;
    env_cfg.default_width = cfg.env.default_width;
    env_cfg.map = map;

    ExpertBuffer expert = build_expert_buffer(catalog, env_cfg);
    if (expert.size() < 2)
        throw ValidationError("expert buffer needs at least two state-action pairs");
    BatchStats expert_stats = expert_action_stats(expert);

    const NetworkConfig& nc = cfg.network;
    Network policy(policy_layout(nc.model_dim, nc.heads, nc.attn_layers, nc.head_hidden,
                                 nc.max_vehicles),
                   tc.seed);
    Network value(value_layout(nc.model_dim, nc.heads, nc.attn_layers, nc.head_hidden,
                               nc.max_vehicles),
                  tc.seed + 1);
    Network disc(disc_layout(nc.model_dim, nc.heads, nc.attn_layers, nc.head_hidden,
                             nc.max_vehicles),
                 tc.seed + 2);
    Adam policy_opt(policy.param_count(), tc.lr_ppo);
    Adam value_opt(value.param_count(), tc.lr_ppo);
    Adam disc_opt(disc.param_count(), tc.lr_gail);

    Rng rng(tc.seed);
    ReplayBuffer replay(tc.replay_capacity);

    std::vector<Worker> workers(tc.workers);
    for (size_t w = 0; w < workers.size(); ++w) {
        workers[w].rng = Rng(tc.seed ^ fnv1a64("worker-" + std::to_string(w)));
        workers[w].cursor = w % catalog.size();
        workers[w].stride = tc.workers;
    }

    // Stage one: discriminator warm-up against fresh-policy behaviour.
    size_t warm_total = std::max(tc.workers, tc.batch_gail / 2);
    std::vector<size_t> warm_quotas = split_quota(warm_total, tc.workers);
    collect_all(workers, warm_quotas, catalog, env_cfg, policy, value, disc, cfg.reward);
    for (const Worker& w : workers)
        for (const Transition& t : w.steps) replay.push(t.state, t.action);
    for (size_t epoch = 0; epoch < tc.gail_pretrain_epochs; ++epoch) {
        DiscBatch batch = sample_disc_batch(expert, replay, tc.batch_gail / 2, rng);
        if (batch.size() == 0) break;
        disc_update(disc, batch, tc.lr_gail, &disc_opt);
    }

    // Stage two: adversarial policy optimization.
    std::vector<size_t> quotas = split_quota(tc.batch_ppo, tc.workers);
    std::vector<IterationMetrics> history;
    history.reserve(tc.iterations);
    double w1n = cfg.reward.w1 / (cfg.reward.w1 + cfg.reward.w2);
    double w2n = cfg.reward.w2 / (cfg.reward.w1 + cfg.reward.w2);
    double lambda = cfg.reward.imitation_weight;

    for (size_t iter = 1; iter <= tc.iterations; ++iter) {
        collect_all(workers, quotas, catalog, env_cfg, policy, value, disc, cfg.reward);

        std::vector<std::vector<double>> action_rows;
        action_rows.reserve(tc.batch_ppo);
        for (const Worker& w : workers) {
            for (const Transition& t : w.steps) {
                replay.push(t.state, t.action);
                action_rows.push_back({t.action.accel, t.action.steer});
            }
        }
        BatchStats gen_stats = compute_batch_stats(action_rows);
        double w_dist = w_distance(gen_stats, expert_stats);
        double r_nat = natural_reward(w_dist, cfg.reward.theta_w);

        RolloutBatch batch;
        batch.steps.reserve(tc.batch_ppo);
        double reward_sum = 0.0, adv_score_sum = 0.0;
        size_t episodes_ended = 0, episodes_hit = 0;
        for (Worker& w : workers) {
            std::vector<double> rewards(w.steps.size());
            std::vector<double> values(w.steps.size());
            std::vector<uint8_t> dones(w.steps.size());
            for (size_t i = 0; i < w.steps.size(); ++i) {
                StepPartial& sp = w.partials[i];
                sp.parts.r_natural = r_nat;
                sp.parts.w = w_dist;
                RewardBreakdown full =
                    total_reward(sp.parts, cfg.reward.beta, cfg.reward.w1, cfg.reward.w2);
                double channel = (1.0 - lambda) * r_nat + lambda * sp.imit;
                double r_train = w1n * channel + w2n * full.r_adv;
                w.steps[i].reward = r_train;
                rewards[i] = r_train;
                values[i] = w.steps[i].value;
                dones[i] = w.steps[i].done ? 1 : 0;
                reward_sum += r_train;
                adv_score_sum += full.adv_score;
            }
            GaeResult gae = compute_gae(rewards, values, dones, w.bootstrap, tc.gamma,
                                        tc.gae_lambda);
            for (size_t i = 0; i < w.steps.size(); ++i) {
                batch.steps.push_back(std::move(w.steps[i]));
                batch.advantages.push_back(gae.advantages[i]);
                batch.returns.push_back(gae.returns[i]);
            }
            episodes_ended += w.episodes_ended;
            episodes_hit += w.episodes_hit;
        }

        double mean_adv = 0.0, var_adv = 0.0;
        for (double a : batch.advantages) mean_adv += a;
        mean_adv /= static_cast<double>(batch.advantages.size());
        for (double a : batch.advantages) var_adv += (a - mean_adv) * (a - mean_adv);
        var_adv /= static_cast<double>(batch.advantages.size());
        double std_adv = std::sqrt(var_adv);
        for (double& a : batch.advantages) a = (a - mean_adv) / (std_adv + 1e-8);

        UpdateStats stats = ppo_update(policy, value, batch, tc, policy_opt, value_opt, rng);

        DiscBatch disc_batch = sample_disc_batch(expert, replay, tc.batch_gail / 2, rng);
        if (disc_batch.size() > 0) disc_update(disc, disc_batch, tc.lr_gail, &disc_opt);

        bool reset_flag = apply_resets(policy, value, policy_opt, value_opt, iter, tc, tc.seed);

        IterationMetrics m;
        m.iteration = iter;
        m.mean_reward = reward_sum / static_cast<double>(batch.steps.size());
        m.mean_adv_reward = adv_score_sum / static_cast<double>(batch.steps.size());
        m.w_distance = w_dist;
        m.collision_rate = episodes_ended == 0 ? 0.0
                                               : static_cast<double>(episodes_hit) /
                                                     static_cast<double>(episodes_ended);
        m.fraction_saturated = stats.fraction_saturated;
        m.reset_flag = reset_flag;
        history.push_back(m);
    }

    std::filesystem::create_directories(out_dir);
    TrainResult result{Checkpoint{std::move(policy), std::move(value), std::move(disc),
                                  std::move(expert_stats), config_hash(cfg), tc.seed},
                       std::move(history),
                       (std::filesystem::path(out_dir) / "checkpoint.json").string(),
                       (std::filesystem::path(out_dir) / "metrics.csv").string()};

    save_checkpoint(result.checkpoint_path, result.checkpoint);
    std::ostringstream csv;
    csv << metrics_csv_header() << '\n';
    for (const IterationMetrics& m : result.history) csv << metrics_csv_row(m) << '\n';
    write_text_atomic(result.metrics_path, csv.str());
    return result;
}

} // namespace scgen
