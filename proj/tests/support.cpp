#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "scgen/errors.hpp"
#include "scgen/rng.hpp"

namespace scgen::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    fs::path base = fs::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
        fs::path candidate = base / (tag + "_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(attempt));
        std::error_code ec;
        if (fs::create_directory(candidate, ec)) {
            path_ = candidate.string();
            return;
        }
    }
    throw std::runtime_error("cannot create a temporary test directory under " + base.string());
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

bool file_exists(const std::string& path) { return fs::exists(path); }

namespace {

constexpr double kDt = 0.1;
constexpr double kEventSpacing = 100.0; // seconds between planted events
constexpr double kEventDuration = 10.0;
constexpr double kLaneWidth = 3.7;

std::string padded_id(const char* prefix, size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%03zu", prefix, k);
    return buf;
}

// Lateral ramp progress for a change centered near t_c. The 0.53 s lead
// keeps every sample off the exact lane midline, so the flip lands on the
// first frame past t_c.
double ramp_progress(double t, double t_c) {
    return std::clamp((t - t_c + 0.53) / 1.0, 0.0, 1.0);
}

void finish_kinematics(Trajectory& t) {
    auto& s = t.samples;
    if (s.size() < 2) return;
    for (size_t i = 0; i < s.size(); ++i) {
        size_t j = i + 1 < s.size() ? i : i - 1;
        double dx = s[j + 1].x - s[j].x;
        double dy = s[j + 1].y - s[j].y;
        s[i].speed = std::hypot(dx, dy) / kDt;
        s[i].heading = std::atan2(dy, dx);
    }
}

enum class EventClass { accepted, short_neighbor, no_neighbor, overspeed, teleport };

} // namespace

PlantedCorpus make_planted_corpus(const PlantedCounts& counts) {
    PlantedCorpus out;
    out.counts = counts;
    out.map = make_parallel_lane_map(3);

    // lane pairs cycle through every adjacent transition on a 3-lane road
    const int from_lanes[4] = {0, 1, 1, 2};
    const int to_lanes[4] = {1, 0, 2, 1};

    size_t k = 0;
    auto spawn = [&](EventClass cls) {
        double t0 = kEventSpacing * static_cast<double>(k);
        double t_c = t0 + 5.0;
        int from = from_lanes[k % 4];
        int to = to_lanes[k % 4];
        double y_from = kLaneWidth * from;
        double y_to = kLaneWidth * to;
        double x0 = -200.0 + static_cast<double>(k % 8) * 50.0;
        double speed = cls == EventClass::overspeed ? 65.0 : 20.0;
        size_t n = static_cast<size_t>(std::llround(kEventDuration / kDt)) + 1;

        Trajectory ego;
        ego.vehicle_id = padded_id("e", k);
        for (size_t i = 0; i < n; ++i) {
            double t = t0 + static_cast<double>(i) * kDt;
            TrajectorySample s;
            s.time = t;
            s.x = x0 + speed * (t - t0);
            if (cls == EventClass::teleport && t > t_c + 0.65) s.x += 8.0;
            s.y = y_from + ramp_progress(t, t_c) * (y_to - y_from);
            ego.samples.push_back(s);
        }
        finish_kinematics(ego);
        out.planted_ids.push_back(ego.vehicle_id);
        if (cls == EventClass::accepted) out.expected_pass_ids.push_back(ego.vehicle_id);
        out.trajectories.push_back(std::move(ego));

        if (cls != EventClass::no_neighbor) {
            // one dedicated neighbor; the slot cycles through all four roles
            bool target_lane = k % 4 < 2;
            bool ahead = k % 2 == 0;
            double nb_y = kLaneWidth * (target_lane ? to : from);
            double offset = ahead ? 15.0 : -15.0;
            double amp = 0.05 + 0.02 * static_cast<double>(k % 10);
            double omega = 1.0 + 0.15 * static_cast<double>(k % 7);
            double phase = 0.7 * static_cast<double>(k);

            double nb_t0 = t0;
            size_t nb_n = n;
            if (cls == EventClass::short_neighbor) {
                nb_t0 = t_c - 0.5;
                nb_n = 11;
            }
            Trajectory nb;
            nb.vehicle_id = padded_id("n", k);
            for (size_t i = 0; i < nb_n; ++i) {
                double t = nb_t0 + static_cast<double>(i) * kDt;
                TrajectorySample s;
                s.time = t;
                s.x = x0 + offset + 20.0 * (t - t0);
                s.y = nb_y + amp * std::sin(omega * (t - t0) + phase);
                nb.samples.push_back(s);
            }
            finish_kinematics(nb);
            out.trajectories.push_back(std::move(nb));
        }
        ++k;
    };

    for (size_t i = 0; i < counts.accepted; ++i) spawn(EventClass::accepted);
    for (size_t i = 0; i < counts.short_neighbor; ++i) spawn(EventClass::short_neighbor);
    for (size_t i = 0; i < counts.no_neighbor; ++i) spawn(EventClass::no_neighbor);
    for (size_t i = 0; i < counts.overspeed; ++i) spawn(EventClass::overspeed);
    for (size_t i = 0; i < counts.teleport; ++i) spawn(EventClass::teleport);
    return out;
}

std::vector<Scenario> make_pursuit_catalog(size_t n) {
    std::vector<Scenario> catalog;
    const size_t frames = 41;
    for (size_t i = 0; i < n; ++i) {
        double speed = 13.0 + static_cast<double>(i % 5);
        double gap = 8.0 + static_cast<double>(i % 6);
        double x0 = 30.0 + 2.0 * static_cast<double>(i);

        Scenario s;
        s.scenario_id = "pursuit" + std::to_string(i);
        s.source = "pursuit";
        s.dt = kDt;
        s.t_start = 0.0;
        s.t_end = static_cast<double>(frames - 1) * kDt;
        s.event.vehicle_id = "ego" + std::to_string(i);
        s.event.change_frame = 20;
        s.event.prev_lane = 1;
        s.event.new_lane = 0;

        Trajectory ego;
        ego.vehicle_id = s.event.vehicle_id;
        for (size_t f = 0; f < frames; ++f) {
            double t = static_cast<double>(f) * kDt;
            TrajectorySample sample;
            sample.time = t;
            sample.x = x0 + speed * t;
            sample.y = kLaneWidth * (1.0 - ramp_progress(t, 2.0));
            sample.lane = sample.y > kLaneWidth / 2.0 ? 1 : 0;
            ego.samples.push_back(sample);
        }
        finish_kinematics(ego);
        s.ego = std::move(ego);

        Trajectory follower;
        follower.vehicle_id = "f" + std::to_string(i);
        for (size_t f = 0; f < frames; ++f) {
            double t = static_cast<double>(f) * kDt;
            TrajectorySample sample;
            sample.time = t;
            sample.x = x0 - gap + speed * t;
            sample.y = 0.0;
            sample.speed = speed;
            sample.heading = 0.0;
            sample.lane = 0;
            follower.samples.push_back(sample);
        }
        s.neighbors.emplace(Role::lb, std::move(follower));

        validate_scenario(s);
        catalog.push_back(std::move(s));
    }
    return catalog;
}

RunConfig make_smoke_config() {
    RunConfig cfg;
    cfg.network.model_dim = 8;
    cfg.network.heads = 1;
    cfg.network.attn_layers = 2;
    cfg.network.head_hidden = 16;
    cfg.network.max_vehicles = 2;

    cfg.trainer.iterations = 200;
    cfg.trainer.batch_ppo = 2048;
    cfg.trainer.minibatch = 256;
    cfg.trainer.epochs = 2;
    cfg.trainer.workers = 1;
    cfg.trainer.lr_ppo = 0.001;
    cfg.trainer.lr_gail = 0.0003;
    cfg.trainer.batch_gail = 512;
    cfg.trainer.gail_pretrain_epochs = 2;
    cfg.trainer.replay_capacity = 20000;
    cfg.trainer.entropy_coef = 0.005;

    cfg.reward.w1 = 2.0;
    cfg.reward.w2 = 8.0;
    cfg.reward.imitation_weight = 0.25;
    return cfg;
}

double mc_wasserstein_sq(const std::vector<double>& mu1, const std::vector<double>& sd1,
                         const std::vector<double>& mu2, const std::vector<double>& sd2,
                         size_t samples, uint64_t seed) {
    if (mu1.size() != sd1.size() || mu2.size() != sd2.size() || mu1.size() != mu2.size())
        throw std::runtime_error("dimension mismatch");
    Rng rng(seed);
    double total = 0.0;
    std::vector<double> xs(samples), ys(samples);
    for (size_t d = 0; d < mu1.size(); ++d) {
        for (size_t i = 0; i < samples; ++i) xs[i] = mu1[d] + sd1[d] * rng.normal();
        for (size_t i = 0; i < samples; ++i) ys[i] = mu2[d] + sd2[d] * rng.normal();
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        double acc = 0.0;
        for (size_t i = 0; i < samples; ++i) {
            double diff = xs[i] - ys[i];
            acc += diff * diff;
        }
        total += acc / static_cast<double>(samples);
    }
    return total;
}

FeatureMatrix make_features(size_t rows, const std::vector<std::vector<double>>& filled) {
    if (filled.size() > rows) throw std::runtime_error("more feature rows than capacity");
    FeatureMatrix fm;
    fm.rows = rows;
    fm.data.assign(rows * FeatureMatrix::kFeatures, 0.0);
    fm.mask.assign(rows, 0);
    for (size_t r = 0; r < filled.size(); ++r) {
        if (filled[r].size() != FeatureMatrix::kFeatures)
            throw std::runtime_error("feature row needs 9 values");
        fm.mask[r] = 1;
        for (size_t f = 0; f < FeatureMatrix::kFeatures; ++f) {
            fm.data[r * FeatureMatrix::kFeatures + f] = filled[r][f];
        }
    }
    return fm;
}

} // namespace scgen::testing
