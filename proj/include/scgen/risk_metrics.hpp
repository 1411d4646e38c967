#pragma once

#include <optional>
#include <string>
#include <vector>

namespace scgen {

struct RiskThresholds {
    double tau_a_lo = 0.0; // jerk, m/s^3
    double tau_a_hi = 0.0;
    double tau_t_lo = 0.0; // smoothness, meters
    double tau_t_hi = 0.0;
    double q_lo = 0.75;
    double q_hi = 0.95;
};

struct RiskWeights {
    double w_coll = 0.8;
    double w_jerk = 0.1;
    double w_smooth = 0.1;
};

enum class RiskAggregate { mean, median };

struct EpisodeRisk {
    std::string episode_id;
    std::optional<double> jerk;       // mean absolute lateral jerk
    std::optional<double> smoothness; // mean absolute second difference
    bool collided = false;            // ego-adversary collision only
};

struct RiskReport {
    std::vector<EpisodeRisk> episodes;
    double c_coll = 0.0;
    double agg_jerk = 0.0;
    double agg_smoothness = 0.0;
    double psi_jerk = 0.0;
    double psi_smoothness = 0.0;
    double d_risk = 0.0;
    RiskThresholds thresholds;
    RiskWeights weights;
    RiskAggregate aggregate = RiskAggregate::mean;
};

// Mean absolute lateral jerk from three cascaded forward differences of the
// lateral positions; T >= 4 required.
double lateral_jerk(const std::vector<double>& y, double dt);

// Mean absolute second difference of lateral position; T >= 3 required.
double traj_smoothness(const std::vector<double>& y);

// clip((x - lo) / (hi - lo), 0, 1); lo < hi required.
double normalize_psi(double x, double tau_lo, double tau_hi);

// Fraction of episodes with an ego-adversary collision; nonempty required.
double collision_rate(const std::vector<bool>& collided);

// Nearest-rank quantile (rank = ceil(q * N)) of an unsorted sample.
double nearest_rank_quantile(std::vector<double> values, double q);

// Expert-quantile calibration over per-episode proxies; needs >= 20 episodes
// and non-degenerate distributions.
RiskThresholds calibrate_thresholds(const std::vector<double>& jerks,
                                    const std::vector<double>& smoothness, double q_lo = 0.75,
                                    double q_hi = 0.95);

// Convex combination of the collision rate and the two normalized proxies.
// Weights must sum to 1. Episodes too short for a proxy still count in the
// collision rate.
RiskReport dangerousness(std::vector<EpisodeRisk> episodes, const RiskThresholds& thresholds,
                         const RiskWeights& weights = {},
                         RiskAggregate aggregate = RiskAggregate::mean);

std::string risk_report_json(const RiskReport& report);
void write_risk_report(const std::string& json_path, const std::string& csv_path,
                       const RiskReport& report);

} // namespace scgen
