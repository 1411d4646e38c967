#pragma once

#include <optional>
#include <vector>

#include "scgen/sim_env.hpp"

namespace scgen {

// Per-action-dimension mean and diagonal covariance over one batch.
struct BatchStats {
    std::vector<double> mean;
    std::vector<double> var; // population variance, entries >= 0
    size_t count = 0;
};

BatchStats compute_batch_stats(const std::vector<std::vector<double>>& rows);

// Squared 2-Wasserstein between diagonal Gaussians:
// ||mu1 - mu2||^2 + sum_d (sigma1_d - sigma2_d)^2.
double w_distance(const BatchStats& p1, const BatchStats& p2);

// clip((theta_w - w) / theta_w, 0, 1); theta_w must be positive.
double natural_reward(double w, double theta_w);

enum class SvoMode { fixed, adaptive };

struct SVOConfig {
    SvoMode mode = SvoMode::adaptive;
    double phi = 0.0;        // radians, fixed mode, in [-pi/2, pi/2]
    double beta0 = 1.0;      // baseline weight for every vehicle
    double beta1 = 1.0;      // extra weight for priority vehicles
    double lambda_phi = 0.9; // smoothing of the adaptive angle, in [0, 1]
    double epsilon = 1e-6;   // closing-speed stability constant
};

void validate_svo_config(const SVOConfig& cfg);

struct SocialUtility {
    double u_sv = 0.0;
    std::vector<double> s; // closing speed per feature row, 0 for masked rows
};

// S_i = max(0, -(x vx + y vy) / (r + eps)) per unmasked vehicle;
// U_sv = sum_i (beta0 + beta1 p_i) S_i.
SocialUtility social_utility(const FeatureMatrix& fm, const SVOConfig& cfg);

struct SvoResult {
    double r_svo = 0.0;
    double phi_t = 0.0;
};

// Fixed mode uses cfg.phi. Adaptive mode smooths arctan2(U_sv, U_ego) with
// lambda_phi against phi_prev; the first step (no phi_prev) starts at the raw
// angle.
SvoResult svo_reward(double u_ego_val, double u_sv, const SVOConfig& cfg,
                     std::optional<double> phi_prev);

// Adversary progress utility: clip(speed / v_ref, 0, 2).
double u_ego(const EnvState& state, double v_ref = 30.0);

// clip(1 - dist_t / dist_t0, -1, 1). Requires a positive initial distance.
double distance_reward(const EnvState& state);

// +1 adversary hit the ego, -1 background-only collision, 0 otherwise.
double collision_reward(const CollisionReport& rep);

struct RewardBreakdown {
    double r_natural = 0.0; // in [0, 1]
    double r_svo = 0.0;
    double r_dist = 0.0;  // in [-1, 1]
    double r_coll = 0.0;  // in {-1, 0, 1}
    double r_adv = 0.0;   // r_svo + r_dist + r_coll
    double total = 0.0;   // w1 r_natural + w2 r_adv, weights normalized
    double adv_score = 0.0; // evaluation diagnostic: r_svo + beta * r_adv
    // diagnostics
    double u_ego = 0.0;
    double u_sv = 0.0;
    double phi_t = 0.0;
    double w = 0.0; // distribution distance behind r_natural
};

// Fills r_adv, total, and adv_score from the already-populated component
// fields. w1:w2 is normalized to sum 1; their raw sum must be positive.
RewardBreakdown total_reward(RewardBreakdown parts, double beta, double w1, double w2);

// Reward shaping knobs, file-configurable as the "reward" section.
struct RewardConfig {
    double theta_w = 0.9;
    double beta = 1.0; // evaluation-score weight
    double w1 = 6.0;
    double w2 = 4.0;
    double beta0 = 1.0;
    double beta1 = 1.0;
    SvoMode svo_mode = SvoMode::adaptive;
    double svo_angle_deg = 0.0; // fixed mode angle
    double lambda_phi = 0.9;
    double epsilon = 1e-6;
    double v_ref = 30.0;
    double imitation_weight = 0.5; // share of the naturalness channel from the discriminator

    SVOConfig svo() const {
        SVOConfig cfg;
        cfg.mode = svo_mode;
        cfg.phi = svo_angle_deg * M_PI / 180.0;
        cfg.beta0 = beta0;
        cfg.beta1 = beta1;
        cfg.lambda_phi = lambda_phi;
        cfg.epsilon = epsilon;
        return cfg;
    }
};

} // namespace scgen
