#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scgen/lane_map.hpp"
#include "scgen/trajectory.hpp"

namespace scgen {

struct LaneChangeEvent {
    std::string vehicle_id;
    size_t change_frame = 0; // sample index in the resampled trajectory
    int prev_lane = 0;
    int new_lane = 0;
};

// Neighbor roles around the ego at the change frame. Array order is the
// canonical role order used everywhere (iteration, serialization,
// adversary preference).
enum class Role { lf = 0, lb = 1, rf = 2, rb = 3 };
constexpr std::array<Role, 4> kAllRoles = {Role::lf, Role::lb, Role::rf, Role::rb};
const char* role_name(Role r);
std::optional<Role> role_from_name(const std::string& name);

struct NeighborSet {
    std::array<std::optional<std::string>, 4> ids; // indexed by Role

    std::optional<std::string>& operator[](Role r) { return ids[static_cast<size_t>(r)]; }
    const std::optional<std::string>& operator[](Role r) const {
        return ids[static_cast<size_t>(r)];
    }
    bool empty() const {
        for (const auto& id : ids) {
            if (id) return false;
        }
        return true;
    }
};

struct Scenario {
    std::string scenario_id;
    std::string source; // corpus tag
    LaneChangeEvent event; // change_frame re-indexed into the window
    double t_start = 0.0;
    double t_end = 0.0;
    double dt = 0.1;
    Trajectory ego;                    // windowed
    std::map<Role, Trajectory> neighbors; // windowed, only roles that survived cleaning
};

struct MiningStats {
    size_t candidates = 0;
    size_t accepted = 0;
    std::array<size_t, 4> role_counts{}; // presence of each role among accepted
    std::map<std::string, size_t> rejections; // reason -> count
    size_t dropped_trajectories = 0; // unusable before detection (gaps, too short)

    double conversion_rate() const {
        return candidates == 0 ? 0.0 : static_cast<double>(accepted) / candidates;
    }
};

struct Rejection {
    enum class Kind { coverage, gap, outlier, extra_change };
    Kind kind;
    std::string detail;
};
const char* rejection_name(Rejection::Kind k);

struct MinerConfig {
    double dt = 0.1;             // resampling timestep, seconds
    double window_half_s = 2.0;  // window half-width around the change frame
    double debounce_s = 1.0;     // collapse repeat detections within this span
    double gap_s = 0.5;          // max source-sample gap tolerated by resampling
    double max_speed = 60.0;     // m/s, cleaning outlier bound
    double max_step_disp = 6.0;  // m per step at dt, cleaning continuity bound
    std::string source_tag = "corpus";
};

// Lane changes of one resampled trajectory whose lane indices have been
// assigned (assign_lanes). An index flip counts only when the two lanes are
// adjacent in the map; detections within debounce_s of the previous kept
// event are collapsed to the first.
std::vector<LaneChangeEvent> detect_lane_changes(const Trajectory& t, const LaneMap& map,
                                                 double debounce_s = 1.0);

// Nearest vehicles ahead of / behind the ego's longitudinal position at the
// change frame, on the previous and new lanes, mapped to LF/LB/RF/RB. Lower
// lane index is the map-defined left, so the side of each lane pair follows
// the sign of (new_lane - prev_lane).
NeighborSet find_neighbors(const LaneChangeEvent& event, const Trajectory& ego,
                           const std::vector<Trajectory>& corpus, const LaneMap& map);

// Windows [change - window_half_s, change + window_half_s] clipped to the
// ego's data, keeps neighbors that pass cleaning over the window, and
// accepts when the ego passes and at least one neighbor remains.
std::variant<Scenario, Rejection> clean_and_window(const LaneChangeEvent& event,
                                                   const Trajectory& ego,
                                                   const NeighborSet& neighbors,
                                                   const std::vector<Trajectory>& corpus,
                                                   const MinerConfig& config);

struct MiningResult {
    std::vector<Scenario> catalog;
    MiningStats stats;
};

// Full pipeline over an already-loaded corpus: resample (trajectories with
// gaps are dropped), assign lanes, detect, neighbor search, clean, window.
// Catalog ordered by (vehicle_id, change_frame).
MiningResult mine_corpus(const std::vector<Trajectory>& corpus, const LaneMap& map,
                         const MinerConfig& config);

// Assigns per-sample lane indices by nearest-centerline matching.
void assign_lanes(Trajectory& t, const LaneMap& map);

// Scenario invariants: common uniform timestep over the full window for the
// ego and every neighbor, and exactly one lane change of the ego inside the
// window. Throws ValidationError when violated.
void validate_scenario(const Scenario& s);

// Catalog persistence: JSONL, one scenario per line, stable field order.
void write_catalog(const std::string& path, const std::vector<Scenario>& catalog);
std::vector<Scenario> read_catalog(const std::string& path);

std::string mining_stats_json(const MiningStats& stats);
std::string mining_stats_table(const MiningStats& stats);

} // namespace scgen
