#include "scgen/reward_engine.hpp"

#include <algorithm>
#include <cmath>

#include "scgen/errors.hpp"

namespace scgen {

BatchStats compute_batch_stats(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) {
        throw ValidationError("batch stats require at least 2 samples, got " +
                              std::to_string(rows.size()));
    }
    size_t dim = rows[0].size();
    BatchStats stats;
    stats.count = rows.size();
    stats.mean.assign(dim, 0.0);
    stats.var.assign(dim, 0.0);
    for (const auto& row : rows) {
        if (row.size() != dim) throw ValidationError("batch stats: ragged rows");
        for (size_t d = 0; d < dim; ++d) stats.mean[d] += row[d];
    }
    for (size_t d = 0; d < dim; ++d) stats.mean[d] /= static_cast<double>(stats.count);
    for (const auto& row : rows) {
        for (size_t d = 0; d < dim; ++d) {
            double diff = row[d] - stats.mean[d];
            stats.var[d] += diff * diff;
        }
    }
    for (size_t d = 0; d < dim; ++d) stats.var[d] /= static_cast<double>(stats.count);
    return stats;
}

double w_distance(const BatchStats& p1, const BatchStats& p2) {
    if (p1.mean.size() != p2.mean.size() || p1.var.size() != p2.var.size()) {
        throw ValidationError("w_distance: dimension mismatch");
    }
    double w = 0.0;
    for (size_t d = 0; d < p1.mean.size(); ++d) {
        double dm = p1.mean[d] - p2.mean[d];
        double ds = std::sqrt(std::max(0.0, p1.var[d])) - std::sqrt(std::max(0.0, p2.var[d]));
        w += dm * dm + ds * ds;
    }
    return w;
}

double natural_reward(double w, double theta_w) {
    if (!(theta_w > 0.0)) {
        throw ValidationError("natural_reward: theta_w must be positive");
    }
    return std::clamp((theta_w - w) / theta_w, 0.0, 1.0);
}

void validate_svo_config(const SVOConfig& cfg) {
    if (cfg.mode == SvoMode::fixed && (cfg.phi < -M_PI / 2.0 || cfg.phi > M_PI / 2.0)) {
        throw ValidationError("svo: fixed angle must lie in [-pi/2, pi/2]");
    }
    if (!std::isfinite(cfg.beta0) || !std::isfinite(cfg.beta1)) {
        throw ValidationError("svo: weights must be finite");
    }
    if (cfg.lambda_phi < 0.0 || cfg.lambda_phi > 1.0) {
        throw ValidationError("svo: lambda_phi must lie in [0, 1]");
    }
}

SocialUtility social_utility(const FeatureMatrix& fm, const SVOConfig& cfg) {
    SocialUtility out;
    out.s.assign(fm.rows, 0.0);
    for (size_t r = 0; r < fm.rows; ++r) {
        if (!fm.mask[r]) continue;
        double x = fm.at(r, 1);
        double y = fm.at(r, 2);
        double vx = fm.at(r, 3);
        double vy = fm.at(r, 4);
        double priority = fm.at(r, 7);
        double dist = fm.at(r, 8);
        double s = std::max(0.0, -(x * vx + y * vy) / (dist + cfg.epsilon));
        out.s[r] = s;
        out.u_sv += (cfg.beta0 + cfg.beta1 * priority) * s;
    }
    return out;
}

SvoResult svo_reward(double u_ego_val, double u_sv, const SVOConfig& cfg,
                     std::optional<double> phi_prev) {
    SvoResult out;
    if (cfg.mode == SvoMode::fixed) {
        out.phi_t = cfg.phi;
    } else {
        double phi_raw = std::atan2(u_sv, u_ego_val);
        out.phi_t = phi_prev ? cfg.lambda_phi * *phi_prev + (1.0 - cfg.lambda_phi) * phi_raw
                             : phi_raw;
    }
    out.r_svo = u_ego_val * std::cos(out.phi_t) + u_sv * std::sin(out.phi_t);
    return out;
}

double u_ego(const EnvState& state, double v_ref) {
    return std::clamp(state.adversary.speed / v_ref, 0.0, 2.0);
}

double distance_reward(const EnvState& state) {
    if (!(state.initial_distance > 0.0)) {
        throw ValidationError("distance_reward: initial distance must be positive");
    }
    double dist = std::hypot(state.adversary.x - state.ego.x, state.adversary.y - state.ego.y);
    return std::clamp(1.0 - dist / state.initial_distance, -1.0, 1.0);
}

double collision_reward(const CollisionReport& rep) {
    if (rep.adv_hit_ego) return 1.0;
    if (rep.adv_hit_background) return -1.0;
    return 0.0;
}

RewardBreakdown total_reward(RewardBreakdown parts, double beta, double w1, double w2) {
    double sum = w1 + w2;
    if (!std::isfinite(sum) || sum <= 0.0) {
        throw ValidationError("total_reward: w1 + w2 must be positive");
    }
    parts.r_adv = parts.r_svo + parts.r_dist + parts.r_coll;
    parts.total = (w1 / sum) * parts.r_natural + (w2 / sum) * parts.r_adv;
    parts.adv_score = parts.r_svo + beta * parts.r_adv;
    return parts;
}

} // namespace scgen
