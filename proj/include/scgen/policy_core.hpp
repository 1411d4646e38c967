#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scgen/sim_env.hpp"

namespace scgen {

// Shape of the set-attention network. One "layer" for reset purposes is a
// parameter group: [0] per-vehicle projection, [1..attn_layers] attention
// blocks, then three dense head groups. Default shape has 6 groups, so
// resetting the last 3 re-draws exactly the head.
struct NetworkLayout {
    size_t feature_dim = 9;
    size_t max_vehicles = 8;
    size_t model_dim = 32;  // per-vehicle embedding width, divisible by heads
    size_t heads = 2;       // 1..4
    size_t attn_layers = 2; // 2..4
    size_t head_hidden = 64;
    size_t aux_dim = 0; // extra scalars appended to the pooled embedding
    size_t out_dim = 1;
    bool policy_log_std = false; // appends out_dim log-std parameters to the last group

    bool operator==(const NetworkLayout&) const = default;
};

void validate_layout(const NetworkLayout& layout);

struct ActionDistribution {
    static constexpr double kLogStdMin = -5.0;
    static constexpr double kLogStdMax = 2.0;

    std::vector<double> mean;
    std::vector<double> log_std; // already clamped
};

// Flat-parameter network with analytic gradients. Attention runs over the
// unmasked rows only, in a canonical row order (lexicographic by feature
// values), which makes set symmetry exact in floating point.
class Network {
  public:
    Network(NetworkLayout layout, uint64_t seed);

    const NetworkLayout& layout() const { return layout_; }
    uint64_t init_seed() const { return init_seed_; }
    size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    size_t layer_count() const { return group_offsets_.size(); }
    // [offset, length) of one parameter group in the flat vector
    std::pair<size_t, size_t> layer_span(size_t group) const;
    // offset of the log-std block (policy_log_std layouts only)
    size_t log_std_offset() const;

    struct Cache {
        std::vector<size_t> order; // unmasked row indices, canonical order
        std::vector<double> input_rows; // n x feature_dim, reordered
        std::vector<double> aux;
        std::vector<std::vector<double>> x; // x[0] post-projection, x[i] post attn layer i
        struct AttnCache {
            std::vector<double> q, k, v;    // n x d
            std::vector<double> attn;       // heads x n x n, softmaxed
            std::vector<double> concat;     // n x d, heads' outputs
            std::vector<double> pre;        // n x d, residual pre-tanh input
        };
        std::vector<AttnCache> attn;
        std::vector<double> pooled;  // d
        std::vector<double> h1, h2;  // post-tanh head activations
        std::vector<double> out;
        bool valid = false;
    };

    // Raw head outputs (out_dim). aux must match layout.aux_dim.
    std::vector<double> forward(const FeatureMatrix& fm, const std::vector<double>& aux,
                                Cache* cache = nullptr) const;

    // Gradient of sum(d_out . out) w.r.t. every parameter. Requires the cache
    // of the matching forward call. Log-std parameters get zero here; their
    // gradient is analytic at the loss level.
    std::vector<double> backward(const Cache& cache, const std::vector<double>& d_out) const;

    // Re-draws the last k parameter groups from the given seed; earlier bytes
    // untouched. Throws ValidationError when k exceeds the group count.
    void reset_last_layers(size_t k, uint64_t seed);

  private:
    void fill_group(size_t group, class Rng& rng);
    size_t group_of_fan_in(size_t group) const;

    NetworkLayout layout_;
    uint64_t init_seed_ = 0;
    std::vector<double> params_;
    std::vector<size_t> group_offsets_; // parallel arrays
    std::vector<size_t> group_sizes_;
};

// Head wiring used across the project: policy emits a diagonal Gaussian over
// pre-squash action coordinates, value a scalar, discriminator a logit that
// forward_disc squashes to (0,1).
NetworkLayout policy_layout(size_t model_dim = 32, size_t heads = 2, size_t attn_layers = 2,
                            size_t head_hidden = 64, size_t max_vehicles = 8);
NetworkLayout value_layout(size_t model_dim = 32, size_t heads = 2, size_t attn_layers = 2,
                           size_t head_hidden = 64, size_t max_vehicles = 8);
NetworkLayout disc_layout(size_t model_dim = 32, size_t heads = 2, size_t attn_layers = 2,
                          size_t head_hidden = 64, size_t max_vehicles = 8);

ActionDistribution forward_policy(const Network& net, const FeatureMatrix& fm,
                                  Network::Cache* cache = nullptr);
double forward_value(const Network& net, const FeatureMatrix& fm,
                     Network::Cache* cache = nullptr);
double forward_disc(const Network& net, const FeatureMatrix& fm, const Action& a,
                    Network::Cache* cache = nullptr);

// Squash an unbounded pre-action z into the hard Action box via tanh scaling.
Action squash_action(const std::vector<double>& z);
// Log-density of z under the distribution, including the squash correction
// (the correction depends only on z, so PPO ratios reduce to Gaussian ratios).
double squashed_log_prob(const ActionDistribution& dist, const std::vector<double>& z);
double gaussian_log_prob(const ActionDistribution& dist, const std::vector<double>& z);
double dist_entropy(const ActionDistribution& dist);

// Checkpoint fragments: layout + parameters (hex-encoded IEEE754) + seed.
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& json_text);

// First-order adaptive-moment optimizer over the flat parameter vector.
class Adam {
  public:
    Adam(size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::vector<double>& params, const std::vector<double>& grads);
    // Clears moment estimates for a parameter slice (used after layer resets).
    void zero_slice(size_t offset, size_t length);
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

  private:
    double lr_, beta1_, beta2_, eps_;
    uint64_t t_ = 0;
    std::vector<double> m_, v_;
};

// L2 norm clip: scales grads in place when their norm exceeds max_norm.
void clip_grad_norm(std::vector<double>& grads, double max_norm);

} // namespace scgen
