#include "scgen/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "scgen/errors.hpp"

namespace scgen {

using ordered_json = nlohmann::ordered_json;

const char* role_name(Role r) {
    switch (r) {
        case Role::lf: return "lf";
        case Role::lb: return "lb";
        case Role::rf: return "rf";
        case Role::rb: return "rb";
    }
    return "?";
}

std::optional<Role> role_from_name(const std::string& name) {
    for (Role r : kAllRoles) {
        if (name == role_name(r)) return r;
    }
    return std::nullopt;
}

const char* rejection_name(Rejection::Kind k) {
    switch (k) {
        case Rejection::Kind::coverage: return "coverage";
        case Rejection::Kind::gap: return "gap";
        case Rejection::Kind::outlier: return "outlier";
        case Rejection::Kind::extra_change: return "extra_change";
    }
    return "?";
}

void assign_lanes(Trajectory& t, const LaneMap& map) {
    for (auto& s : t.samples) {
        s.lane = match_lane(map, {s.x, s.y});
    }
}

std::vector<LaneChangeEvent> detect_lane_changes(const Trajectory& t, const LaneMap& map,
                                                 double debounce_s) {
    std::vector<LaneChangeEvent> events;
    std::optional<int> last_lane;
    double last_detection_time = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < t.samples.size(); ++i) {
        const auto& s = t.samples[i];
        if (!s.lane) continue;
        if (last_lane && *s.lane != *last_lane) {
            bool adjacent = map.adjacent(*last_lane, *s.lane) && map.adjacent(*s.lane, *last_lane);
            if (adjacent) {
                // a chain of detections each within debounce_s of the previous
                // collapses onto its first (lane-boundary jitter)
                if (s.time - last_detection_time > debounce_s) {
                    events.push_back({t.vehicle_id, i, *last_lane, *s.lane});
                }
                last_detection_time = s.time;
            }
        }
        last_lane = s.lane;
    }
    return events;
}

namespace {

// Sample index of t nearest in time to query, or nullopt when the nearest is
// further than tol.
std::optional<size_t> sample_at_time(const Trajectory& t, double query, double tol) {
    if (t.samples.empty()) return std::nullopt;
    auto it = std::lower_bound(t.samples.begin(), t.samples.end(), query,
                               [](const TrajectorySample& s, double v) { return s.time < v; });
    size_t best = 0;
    if (it == t.samples.end()) {
        best = t.samples.size() - 1;
    } else {
        best = static_cast<size_t>(it - t.samples.begin());
        if (best > 0 && query - t.samples[best - 1].time < t.samples[best].time - query) {
            --best;
        }
    }
    if (std::abs(t.samples[best].time - query) > tol) return std::nullopt;
    return best;
}

double grid_dt(const Trajectory& t) {
    if (t.samples.size() < 2) return 0.1;
    return t.samples[1].time - t.samples[0].time;
}

struct SlotPick {
    double dist = std::numeric_limits<double>::infinity();
    std::string id;
};

void consider(SlotPick& slot, double dist, const std::string& id) {
    if (dist < slot.dist || (dist == slot.dist && (slot.id.empty() || id < slot.id))) {
        slot.dist = dist;
        slot.id = id;
    }
}

} // namespace

NeighborSet find_neighbors(const LaneChangeEvent& event, const Trajectory& ego,
                           const std::vector<Trajectory>& corpus, const LaneMap& map) {
    NeighborSet out;
    if (event.change_frame >= ego.samples.size()) return out;
    const auto& es = ego.samples[event.change_frame];
    double t_c = es.time;
    double tol = 0.5 * grid_dt(ego) + 1e-9;

    const Lane* prev = map.find(event.prev_lane);
    const Lane* next = map.find(event.new_lane);
    if (!prev || !next) return out;
    double ego_s_prev = polyline_project_arclength({es.x, es.y}, prev->centerline);
    double ego_s_next = polyline_project_arclength({es.x, es.y}, next->centerline);

    // slot order: {new lane front, new lane behind, prev lane front, prev lane behind}
    SlotPick picks[4];
    for (const Trajectory& v : corpus) {
        if (v.vehicle_id == ego.vehicle_id) continue;
        auto idx = sample_at_time(v, t_c, tol);
        if (!idx) continue;
        const auto& vs = v.samples[*idx];
        std::optional<int> lane = vs.lane ? vs.lane : match_lane(map, {vs.x, vs.y});
        if (!lane) continue;
        if (*lane == event.new_lane) {
            double s = polyline_project_arclength({vs.x, vs.y}, next->centerline);
            double d = s - ego_s_next;
            if (d >= 0.0) {
                consider(picks[0], d, v.vehicle_id);
            } else {
                consider(picks[1], -d, v.vehicle_id);
            }
        } else if (*lane == event.prev_lane) {
            double s = polyline_project_arclength({vs.x, vs.y}, prev->centerline);
            double d = s - ego_s_prev;
            if (d >= 0.0) {
                consider(picks[2], d, v.vehicle_id);
            } else {
                consider(picks[3], -d, v.vehicle_id);
            }
        }
    }

    // Lower lane index is the map-defined left; the new lane's pair lands on
    // the side given by the change direction.
    bool left_change = event.new_lane < event.prev_lane;
    Role new_front = left_change ? Role::lf : Role::rf;
    Role new_behind = left_change ? Role::lb : Role::rb;
    Role prev_front = left_change ? Role::rf : Role::lf;
    Role prev_behind = left_change ? Role::rb : Role::lb;
    if (!picks[0].id.empty()) out[new_front] = picks[0].id;
    if (!picks[1].id.empty()) out[new_behind] = picks[1].id;
    if (!picks[2].id.empty()) out[prev_front] = picks[2].id;
    if (!picks[3].id.empty()) out[prev_behind] = picks[3].id;
    return out;
}

namespace {

struct CleanFailure {
    Rejection::Kind kind;
    std::string detail;
};

// Speed and per-step continuity checks over a sample window.
std::optional<CleanFailure> check_clean(const std::vector<TrajectorySample>& samples,
                                        const std::string& id, const MinerConfig& config) {
    for (size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].speed < config.max_speed)) {
            return CleanFailure{Rejection::Kind::outlier,
                                id + ": speed " + std::to_string(samples[i].speed) +
                                    " exceeds " + std::to_string(config.max_speed)};
        }
        if (i > 0) {
            double dx = samples[i].x - samples[i - 1].x;
            double dy = samples[i].y - samples[i - 1].y;
            double disp = std::hypot(dx, dy);
            if (!(disp < config.max_step_disp)) {
                return CleanFailure{Rejection::Kind::outlier,
                                    id + ": step displacement " + std::to_string(disp) +
                                        " exceeds " + std::to_string(config.max_step_disp)};
            }
        }
    }
    return std::nullopt;
}

} // namespace

std::variant<Scenario, Rejection> clean_and_window(const LaneChangeEvent& event,
                                                   const Trajectory& ego,
                                                   const NeighborSet& neighbors,
                                                   const std::vector<Trajectory>& corpus,
                                                   const MinerConfig& config) {
    if (event.change_frame == 0 || event.change_frame >= ego.samples.size()) {
        return Rejection{Rejection::Kind::coverage, "change frame outside ego data"};
    }
    size_t half = static_cast<size_t>(std::llround(config.window_half_s / config.dt));
    size_t i0 = event.change_frame >= half ? event.change_frame - half : 0;
    size_t i1 = std::min(ego.samples.size() - 1, event.change_frame + half);
    if (i1 - i0 < 2) {
        return Rejection{Rejection::Kind::coverage, "window shorter than two steps"};
    }

    std::vector<TrajectorySample> ego_win(ego.samples.begin() + static_cast<long>(i0),
                                          ego.samples.begin() + static_cast<long>(i1) + 1);
    if (auto fail = check_clean(ego_win, "ego " + ego.vehicle_id, config)) {
        return Rejection{fail->kind, fail->detail};
    }

    // exactly one lane flip inside the window
    size_t flips = 0;
    std::optional<int> last_lane;
    for (const auto& s : ego_win) {
        if (!s.lane) continue;
        if (last_lane && *s.lane != *last_lane) ++flips;
        last_lane = s.lane;
    }
    if (flips != 1) {
        return Rejection{Rejection::Kind::extra_change,
                         "ego " + ego.vehicle_id + " has " + std::to_string(flips) +
                             " lane flips in window"};
    }

    double w_start = ego.samples[i0].time;
    double w_end = ego.samples[i1].time;
    double tol = 1e-6;

    std::map<Role, Trajectory> kept;
    std::optional<Rejection> first_failure;
    for (Role r : kAllRoles) {
        const auto& id = neighbors[r];
        if (!id) continue;
        const Trajectory* nb = nullptr;
        for (const Trajectory& v : corpus) {
            if (v.vehicle_id == *id) {
                nb = &v;
                break;
            }
        }
        if (!nb) continue;
        std::optional<CleanFailure> fail;
        std::vector<TrajectorySample> win;
        if (nb->samples.empty() || nb->start_time() > w_start + tol ||
            nb->end_time() < w_end - tol) {
            fail = CleanFailure{Rejection::Kind::coverage,
                                *id + " does not cover [" + std::to_string(w_start) + ", " +
                                    std::to_string(w_end) + "]"};
        } else {
            for (size_t k = i0; k <= i1 && !fail; ++k) {
                double t_grid = ego.samples[k].time;
                auto idx = sample_at_time(*nb, t_grid, tol);
                if (!idx) {
                    fail = CleanFailure{Rejection::Kind::gap,
                                        *id + " missing sample at t=" + std::to_string(t_grid)};
                    break;
                }
                TrajectorySample s = nb->samples[*idx];
                s.time = t_grid; // snap onto the ego grid
                win.push_back(s);
            }
            if (!fail) fail = check_clean(win, *id, config);
        }
        if (fail) {
            if (!first_failure) first_failure = Rejection{fail->kind, fail->detail};
            continue;
        }
        Trajectory wt;
        wt.vehicle_id = nb->vehicle_id;
        wt.length = nb->length;
        wt.width = nb->width;
        wt.samples = std::move(win);
        kept.emplace(r, std::move(wt));
    }

    if (kept.empty()) {
        if (first_failure) return *first_failure;
        return Rejection{Rejection::Kind::coverage, "no neighbors at change frame"};
    }

    Scenario s;
    s.scenario_id = ego.vehicle_id + "#" + std::to_string(event.change_frame);
    s.source = config.source_tag;
    s.event = event;
    s.event.change_frame = event.change_frame - i0;
    s.t_start = w_start;
    s.t_end = w_end;
    s.dt = config.dt;
    s.ego.vehicle_id = ego.vehicle_id;
    s.ego.length = ego.length;
    s.ego.width = ego.width;
    s.ego.samples = std::move(ego_win);
    s.neighbors = std::move(kept);
    return s;
}

MiningResult mine_corpus(const std::vector<Trajectory>& corpus, const LaneMap& map,
                         const MinerConfig& config) {
    validate_lane_map(map);
    MiningResult out;

    std::vector<Trajectory> prepared;
    prepared.reserve(corpus.size());
    for (const Trajectory& t : corpus) {
        try {
            Trajectory r = resample(t, config.dt, config.gap_s);
            assign_lanes(r, map);
            prepared.push_back(std::move(r));
        } catch (const GapError&) {
            ++out.stats.dropped_trajectories;
        } catch (const ValidationError&) {
            ++out.stats.dropped_trajectories;
        }
    }

    struct Keyed {
        std::string vehicle_id;
        double t_change;
        Scenario scenario;
    };
    std::vector<Keyed> accepted;
    for (const Trajectory& t : prepared) {
        auto events = detect_lane_changes(t, map, config.debounce_s);
        out.stats.candidates += events.size();
        for (const auto& ev : events) {
            NeighborSet nb = find_neighbors(ev, t, prepared, map);
            auto result = clean_and_window(ev, t, nb, prepared, config);
            if (std::holds_alternative<Rejection>(result)) {
                const auto& rej = std::get<Rejection>(result);
                ++out.stats.rejections[rejection_name(rej.kind)];
                continue;
            }
            Scenario s = std::move(std::get<Scenario>(result));
            double t_change = t.samples[ev.change_frame].time;
            accepted.push_back({t.vehicle_id, t_change, std::move(s)});
        }
    }

    std::sort(accepted.begin(), accepted.end(), [](const Keyed& a, const Keyed& b) {
        if (a.vehicle_id != b.vehicle_id) return a.vehicle_id < b.vehicle_id;
        return a.t_change < b.t_change;
    });
    for (auto& k : accepted) {
        for (Role r : kAllRoles) {
            if (k.scenario.neighbors.count(r)) {
                ++out.stats.role_counts[static_cast<size_t>(r)];
            }
        }
        out.catalog.push_back(std::move(k.scenario));
    }
    out.stats.accepted = out.catalog.size();
    return out;
}

void validate_scenario(const Scenario& s) {
    if (s.dt <= 0.0) throw ValidationError("scenario " + s.scenario_id + ": dt must be positive");
    if (s.t_end <= s.t_start) {
        throw ValidationError("scenario " + s.scenario_id + ": empty window");
    }
    size_t n = static_cast<size_t>(std::llround((s.t_end - s.t_start) / s.dt)) + 1;

    auto check_grid = [&](const Trajectory& t, const std::string& tag) {
        if (t.samples.size() != n) {
            throw ValidationError("scenario " + s.scenario_id + ": " + tag + " has " +
                                  std::to_string(t.samples.size()) + " samples, expected " +
                                  std::to_string(n));
        }
        for (size_t k = 0; k < n; ++k) {
            double expect = s.t_start + static_cast<double>(k) * s.dt;
            if (std::abs(t.samples[k].time - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
                throw ValidationError("scenario " + s.scenario_id + ": " + tag +
                                      " off the common grid at index " + std::to_string(k));
            }
        }
    };
    check_grid(s.ego, "ego");
    for (const auto& [role, traj] : s.neighbors) {
        check_grid(traj, role_name(role));
        if (traj.vehicle_id == s.ego.vehicle_id) {
            throw ValidationError("scenario " + s.scenario_id + ": neighbor id equals ego id");
        }
    }
    for (auto a = s.neighbors.begin(); a != s.neighbors.end(); ++a) {
        for (auto b = std::next(a); b != s.neighbors.end(); ++b) {
            if (a->second.vehicle_id == b->second.vehicle_id) {
                throw ValidationError("scenario " + s.scenario_id + ": duplicate neighbor id " +
                                      a->second.vehicle_id);
            }
        }
    }

    if (s.event.change_frame == 0 || s.event.change_frame >= n) {
        throw ValidationError("scenario " + s.scenario_id + ": change frame outside window");
    }
    size_t flips = 0;
    std::optional<int> last_lane;
    std::optional<size_t> flip_at;
    for (size_t k = 0; k < s.ego.samples.size(); ++k) {
        const auto& sample = s.ego.samples[k];
        if (!sample.lane) continue;
        if (last_lane && *sample.lane != *last_lane) {
            ++flips;
            flip_at = k;
        }
        last_lane = sample.lane;
    }
    if (flips != 1 || !flip_at || *flip_at != s.event.change_frame) {
        throw ValidationError("scenario " + s.scenario_id +
                              ": ego must change lanes exactly once at the recorded frame");
    }
}

namespace {

ordered_json trajectory_to_json(const Trajectory& t) {
    ordered_json j;
    j["vehicle_id"] = t.vehicle_id;
    j["length"] = t.length;
    j["width"] = t.width;
    ordered_json samples = ordered_json::array();
    for (const auto& s : t.samples) {
        ordered_json row = ordered_json::array();
        row.push_back(s.time);
        row.push_back(s.x);
        row.push_back(s.y);
        row.push_back(s.speed);
        row.push_back(s.heading);
        if (s.lane) {
            row.push_back(*s.lane);
        } else {
            row.push_back(nullptr);
        }
        samples.push_back(std::move(row));
    }
    j["samples"] = std::move(samples);
    return j;
}

Trajectory trajectory_from_json(const ordered_json& j) {
    Trajectory t;
    t.vehicle_id = j.at("vehicle_id").get<std::string>();
    t.length = j.at("length").get<double>();
    t.width = j.at("width").get<double>();
    for (const auto& row : j.at("samples")) {
        TrajectorySample s;
        s.time = row.at(0).get<double>();
        s.x = row.at(1).get<double>();
        s.y = row.at(2).get<double>();
        s.speed = row.at(3).get<double>();
        s.heading = row.at(4).get<double>();
        if (!row.at(5).is_null()) s.lane = row.at(5).get<int>();
        t.samples.push_back(s);
    }
    return t;
}

} // namespace

void write_catalog(const std::string& path, const std::vector<Scenario>& catalog) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open catalog for writing: " + path);
    for (const Scenario& s : catalog) {
        ordered_json j;
        j["schema_version"] = 1;
        j["scenario_id"] = s.scenario_id;
        j["source"] = s.source;
        j["t_start"] = s.t_start;
        j["t_end"] = s.t_end;
        j["dt"] = s.dt;
        ordered_json ev;
        ev["vehicle_id"] = s.event.vehicle_id;
        ev["change_frame"] = s.event.change_frame;
        ev["prev_lane"] = s.event.prev_lane;
        ev["new_lane"] = s.event.new_lane;
        j["event"] = std::move(ev);
        j["ego"] = trajectory_to_json(s.ego);
        ordered_json nb;
        for (Role r : kAllRoles) {
            auto it = s.neighbors.find(r);
            if (it != s.neighbors.end()) {
                nb[role_name(r)] = trajectory_to_json(it->second);
            }
        }
        j["neighbors"] = std::move(nb);
        out << j.dump() << "\n";
    }
    if (!out.good()) throw ArtifactError("write failed: " + path);
}

std::vector<Scenario> read_catalog(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open catalog: " + path);
    std::vector<Scenario> catalog;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
        try {
            int version = j.at("schema_version").get<int>();
            if (version != 1) {
                throw SchemaError("unsupported catalog schema_version " +
                                  std::to_string(version) + " in " + path);
            }
            Scenario s;
            s.scenario_id = j.at("scenario_id").get<std::string>();
            s.source = j.at("source").get<std::string>();
            s.t_start = j.at("t_start").get<double>();
            s.t_end = j.at("t_end").get<double>();
            s.dt = j.at("dt").get<double>();
            const auto& ev = j.at("event");
            s.event.vehicle_id = ev.at("vehicle_id").get<std::string>();
            s.event.change_frame = ev.at("change_frame").get<size_t>();
            s.event.prev_lane = ev.at("prev_lane").get<int>();
            s.event.new_lane = ev.at("new_lane").get<int>();
            s.ego = trajectory_from_json(j.at("ego"));
            for (const auto& [key, value] : j.at("neighbors").items()) {
                auto role = role_from_name(key);
                if (!role) throw SchemaError("unknown neighbor role '" + key + "' in " + path);
                s.neighbors.emplace(*role, trajectory_from_json(value));
            }
            catalog.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("catalog " + path + " line " + std::to_string(line_no) + ": " +
                              e.what());
        }
    }
    return catalog;
}

std::string mining_stats_json(const MiningStats& stats) {
    ordered_json j;
    j["candidates"] = stats.candidates;
    j["accepted"] = stats.accepted;
    j["conversion_rate"] = stats.conversion_rate();
    ordered_json roles;
    for (Role r : kAllRoles) {
        roles[role_name(r)] = stats.role_counts[static_cast<size_t>(r)];
    }
    j["role_counts"] = std::move(roles);
    ordered_json rej;
    for (const auto& [reason, count] : stats.rejections) {
        rej[reason] = count;
    }
    j["rejections"] = std::move(rej);
    j["dropped_trajectories"] = stats.dropped_trajectories;
    return j.dump(2);
}

std::string mining_stats_table(const MiningStats& stats) {
    std::ostringstream out;
    out << "candidates          " << stats.candidates << "\n";
    out << "accepted            " << stats.accepted << "\n";
    out << "conversion rate     " << stats.conversion_rate() << "\n";
    for (Role r : kAllRoles) {
        out << "role " << role_name(r) << "             " << stats.role_counts[static_cast<size_t>(r)]
            << "\n";
    }
    for (const auto& [reason, count] : stats.rejections) {
        out << "rejected (" << reason << ") " << count << "\n";
    }
    if (stats.dropped_trajectories > 0) {
        out << "dropped trajectories " << stats.dropped_trajectories << "\n";
    }
    return out.str();
}

} // namespace scgen
