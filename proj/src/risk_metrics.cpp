#include "scgen/risk_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "scgen/errors.hpp"
#include "scgen/num_format.hpp"

namespace scgen {

using ordered_json = nlohmann::ordered_json;

double lateral_jerk(const std::vector<double>& y, double dt) {
    if (y.size() < 4) {
        throw ValidationError("lateral_jerk: need at least 4 samples, got " +
                              std::to_string(y.size()));
    }
    if (!(dt > 0.0)) throw ValidationError("lateral_jerk: dt must be positive");
    size_t n = y.size();
    std::vector<double> v(n - 1), a(n - 2);
    for (size_t k = 0; k + 1 < n; ++k) v[k] = (y[k + 1] - y[k]) / dt;
    for (size_t k = 0; k + 2 < n; ++k) a[k] = (v[k + 1] - v[k]) / dt;
    double sum = 0.0;
    for (size_t k = 0; k + 3 < n; ++k) sum += std::abs((a[k + 1] - a[k]) / dt);
    return sum / static_cast<double>(n - 3);
}

double traj_smoothness(const std::vector<double>& y) {
    if (y.size() < 3) {
        throw ValidationError("traj_smoothness: need at least 3 samples, got " +
                              std::to_string(y.size()));
    }
    double sum = 0.0;
    for (size_t k = 1; k + 1 < y.size(); ++k) {
        sum += std::abs(y[k + 1] - 2.0 * y[k] + y[k - 1]);
    }
    return sum / static_cast<double>(y.size() - 2);
}

double normalize_psi(double x, double tau_lo, double tau_hi) {
    if (!(tau_lo < tau_hi)) {
        throw ValidationError("normalize_psi: lower threshold must be below upper");
    }
    return std::clamp((x - tau_lo) / (tau_hi - tau_lo), 0.0, 1.0);
}

double collision_rate(const std::vector<bool>& collided) {
    if (collided.empty()) throw ValidationError("collision_rate: empty episode list");
    size_t n = 0;
    for (bool c : collided) {
        if (c) ++n;
    }
    return static_cast<double>(n) / static_cast<double>(collided.size());
}

double nearest_rank_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile of empty sample");
    if (q <= 0.0 || q > 1.0) throw ValidationError("quantile q must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(values.size())));
    rank = std::max<size_t>(rank, 1);
    return values[rank - 1];
}

RiskThresholds calibrate_thresholds(const std::vector<double>& jerks,
                                    const std::vector<double>& smoothness, double q_lo,
                                    double q_hi) {
    if (jerks.size() < 20 || smoothness.size() < 20) {
        throw ValidationError("calibrate_thresholds: need at least 20 expert episodes");
    }
    RiskThresholds t;
    t.q_lo = q_lo;
    t.q_hi = q_hi;
    t.tau_a_lo = nearest_rank_quantile(jerks, q_lo);
    t.tau_a_hi = nearest_rank_quantile(jerks, q_hi);
    t.tau_t_lo = nearest_rank_quantile(smoothness, q_lo);
    t.tau_t_hi = nearest_rank_quantile(smoothness, q_hi);
    if (!(t.tau_a_lo < t.tau_a_hi) || !(t.tau_t_lo < t.tau_t_hi)) {
        throw ValidationError(
            "calibrate_thresholds: degenerate quantiles (equal thresholds); a wider or more "
            "varied expert corpus is needed");
    }
    return t;
}

namespace {

double aggregate_values(const std::vector<double>& values, RiskAggregate mode) {
    if (mode == RiskAggregate::median) {
        std::vector<double> v = values;
        std::sort(v.begin(), v.end());
        size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    double sum = 0.0;
    for (double x : values) sum += x;
    return sum / static_cast<double>(values.size());
}

} // namespace

RiskReport dangerousness(std::vector<EpisodeRisk> episodes, const RiskThresholds& thresholds,
                         const RiskWeights& weights, RiskAggregate aggregate) {
    double wsum = weights.w_coll + weights.w_jerk + weights.w_smooth;
    if (weights.w_coll < 0.0 || weights.w_jerk < 0.0 || weights.w_smooth < 0.0 ||
        std::abs(wsum - 1.0) > 1e-9) {
        throw ValidationError("dangerousness: weights must be non-negative and sum to 1");
    }
    if (episodes.empty()) throw ValidationError("dangerousness: no episodes");

    std::vector<bool> collided;
    std::vector<double> jerks, smooths;
    for (const EpisodeRisk& e : episodes) {
        collided.push_back(e.collided);
        if (e.jerk) jerks.push_back(*e.jerk);
        if (e.smoothness) smooths.push_back(*e.smoothness);
    }
    if (jerks.empty() || smooths.empty()) {
        throw ValidationError("dangerousness: no episodes long enough for smoothness proxies");
    }

    RiskReport report;
    report.episodes = std::move(episodes);
    report.thresholds = thresholds;
    report.weights = weights;
    report.aggregate = aggregate;
    report.c_coll = collision_rate(collided);
    report.agg_jerk = aggregate_values(jerks, aggregate);
    report.agg_smoothness = aggregate_values(smooths, aggregate);
    report.psi_jerk = normalize_psi(report.agg_jerk, thresholds.tau_a_lo, thresholds.tau_a_hi);
    report.psi_smoothness =
        normalize_psi(report.agg_smoothness, thresholds.tau_t_lo, thresholds.tau_t_hi);
    report.d_risk = weights.w_coll * report.c_coll + weights.w_jerk * report.psi_jerk +
                    weights.w_smooth * report.psi_smoothness;
    return report;
}

std::string risk_report_json(const RiskReport& report) {
    ordered_json j;
    ordered_json eps = ordered_json::array();
    for (const EpisodeRisk& e : report.episodes) {
        ordered_json row;
        row["episode_id"] = e.episode_id;
        if (e.jerk) {
            row["jerk"] = *e.jerk;
        } else {
            row["jerk"] = nullptr;
        }
        if (e.smoothness) {
            row["smoothness"] = *e.smoothness;
        } else {
            row["smoothness"] = nullptr;
        }
        row["collided"] = e.collided;
        eps.push_back(std::move(row));
    }
    j["episodes"] = std::move(eps);
    ordered_json agg;
    agg["collision_rate"] = report.c_coll;
    agg["collision_rate_percent"] = 100.0 * report.c_coll;
    agg["jerk"] = report.agg_jerk;
    agg["smoothness"] = report.agg_smoothness;
    agg["psi_jerk"] = report.psi_jerk;
    agg["psi_smoothness"] = report.psi_smoothness;
    agg["d_risk"] = report.d_risk;
    agg["d_risk_percent"] = 100.0 * report.d_risk;
    agg["aggregate"] = report.aggregate == RiskAggregate::median ? "median" : "mean";
    j["aggregate"] = std::move(agg);
    ordered_json th;
    th["tau_jerk_lo"] = report.thresholds.tau_a_lo;
    th["tau_jerk_hi"] = report.thresholds.tau_a_hi;
    th["tau_smooth_lo"] = report.thresholds.tau_t_lo;
    th["tau_smooth_hi"] = report.thresholds.tau_t_hi;
    th["q_lo"] = report.thresholds.q_lo;
    th["q_hi"] = report.thresholds.q_hi;
    j["thresholds"] = std::move(th);
    ordered_json w;
    w["w_coll"] = report.weights.w_coll;
    w["w_jerk"] = report.weights.w_jerk;
    w["w_smooth"] = report.weights.w_smooth;
    j["weights"] = std::move(w);
    return j.dump(2);
}

void write_risk_report(const std::string& json_path, const std::string& csv_path,
                       const RiskReport& report) {
    {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw ArtifactError("cannot open risk report for writing: " + json_path);
        out << risk_report_json(report) << "\n";
        if (!out.good()) throw ArtifactError("write failed: " + json_path);
    }
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open risk csv for writing: " + csv_path);
    out << "episode_id,jerk,smoothness,collided\n";
    for (const EpisodeRisk& e : report.episodes) {
        out << e.episode_id << ',' << (e.jerk ? fmt_double(*e.jerk) : "") << ','
            << (e.smoothness ? fmt_double(*e.smoothness) : "") << ',' << (e.collided ? 1 : 0)
            << "\n";
    }
    out << "aggregate,c_coll=" << fmt_double(report.c_coll)
        << ",d_risk=" << fmt_double(report.d_risk)
        << ",d_risk_percent=" << fmt_double(100.0 * report.d_risk) << "\n";
    if (!out.good()) throw ArtifactError("write failed: " + csv_path);
}

} // namespace scgen
