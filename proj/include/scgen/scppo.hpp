#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scgen/config.hpp"
#include "scgen/gail.hpp"
#include "scgen/policy_core.hpp"
#include "scgen/scenario.hpp"

namespace scgen {

// One environment step as stored for the policy update. log_prob is the
// Gaussian log-density at the pre-squash sample z; the squash correction is
// action-only and cancels in probability ratios.
struct Transition {
    FeatureMatrix state;
    std::array<double, 2> z{};
    Action action;
    double log_prob = 0.0;
    double value = 0.0;
    double reward = 0.0;
    bool done = false;
};

struct RolloutBatch {
    std::vector<Transition> steps;
    std::vector<double> advantages; // normalized per batch
    std::vector<double> returns;
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// Generalized advantage estimation over one ordered segment. dones marks
// terminal steps; bootstrap_value is V(s_T) when the segment was cut
// mid-episode (ignored after a terminal step).
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<uint8_t>& dones, double bootstrap_value, double gamma,
                      double lambda);

// Ratio-dependent clip range: lower = alpha r + (1 - alpha)(1 - eps),
// upper = alpha r + (1 - alpha)(1 + eps). alpha = 0 is the hard clip.
struct LeakyBounds {
    double lower = 0.0;
    double upper = 0.0;
};

LeakyBounds leaky_bounds(double ratio, double eps, double alpha);

// min(r A, clip(r, lower(r), upper(r)) A) and its derivative in r. Outside
// the trust region the derivative magnitude stays >= alpha |A|.
struct LeakySurrogate {
    double value = 0.0;
    double d_ratio = 0.0;
};

LeakySurrogate leaky_surrogate(double ratio, double advantage, double eps, double alpha);

// FIFO ring of generated state-action pairs feeding discriminator refreshes.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(size_t capacity);

    void push(FeatureMatrix state, Action action);
    size_t size() const { return items_.size(); }
    size_t capacity() const { return capacity_; }
    const std::pair<FeatureMatrix, Action>& at(size_t i) const;

  private:
    size_t capacity_;
    size_t next_ = 0;
    std::vector<std::pair<FeatureMatrix, Action>> items_;
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double mean_ratio = 0.0;
    double fraction_saturated = 0.0; // ratios outside [1 - eps, 1 + eps]
    double entropy = 0.0;
};

// K epochs of minibatch updates on the batch. Advantages must already be
// normalized. Throws ValidationError on a non-finite loss.
UpdateStats ppo_update(Network& policy, Network& value, const RolloutBatch& batch,
                       const TrainerConfig& cfg, Adam& policy_opt, Adam& value_opt, Rng& rng);

// Re-draws the last reset_layers parameter groups of policy and value with
// seed = base_seed + iteration when the interval divides the iteration, and
// clears the matching optimizer moments. Returns whether a reset fired.
bool apply_resets(Network& policy, Network& value, Adam& policy_opt, Adam& value_opt,
                  size_t iteration, const TrainerConfig& cfg, uint64_t base_seed);

struct Checkpoint {
    Network policy;
    Network value;
    Network disc;
    BatchStats expert_stats;
    std::string config_hash;
    uint64_t base_seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

struct IterationMetrics {
    size_t iteration = 0;
    double mean_reward = 0.0;
    double mean_adv_reward = 0.0;
    double w_distance = 0.0;
    double collision_rate = 0.0;
    double fraction_saturated = 0.0;
    bool reset_flag = false;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const IterationMetrics& m);

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<IterationMetrics> history;
    std::string checkpoint_path;
    std::string metrics_path;
};

// Two-stage adversarial training over the mined catalog: a discriminator
// warm-up against fresh-policy rollouts, then the main loop of rollout
// collection, reward assembly, policy/value updates, discriminator
// refreshes, and periodic head resets. Writes checkpoint.json and
// metrics.csv under out_dir. Deterministic for a fixed config.
TrainResult train(const RunConfig& cfg, const std::vector<Scenario>& catalog, const LaneMap* map,
                  const std::string& out_dir);

} // namespace scgen
