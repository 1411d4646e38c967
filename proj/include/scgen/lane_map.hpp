#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scgen/geometry.hpp"

namespace scgen {

struct Lane {
    int id = 0;
    std::vector<Vec2> centerline;
    double width = 3.7; // meters; standard US highway lane when unspecified
    std::vector<int> adjacent;
    int priority = 0; // 0 or 1, right-of-way indicator
};

struct LaneMap {
    std::vector<Lane> lanes;

    const Lane* find(int id) const {
        for (const Lane& l : lanes) {
            if (l.id == id) return &l;
        }
        return nullptr;
    }
    bool adjacent(int a, int b) const {
        const Lane* la = find(a);
        if (!la) return false;
        for (int n : la->adjacent) {
            if (n == b) return true;
        }
        return false;
    }
    int priority_of(int id) const {
        const Lane* l = find(id);
        return l ? l->priority : 0;
    }
};

// Validates unique ids, positive widths, >= 2 centerline points, symmetric
// adjacency, priority in {0, 1}. Throws ValidationError on violations.
void validate_lane_map(const LaneMap& map);

// JSON lane-map format, versioned with format_version:
//   {"format_version": 1,
//    "lanes": [{"id": 0, "centerline": [[x, y], ...], "width": 3.7,
//               "adjacent": [1], "priority": 0}, ...]}
LaneMap load_lane_map(const std::string& path);
void save_lane_map(const std::string& path, const LaneMap& map);

// Lane whose centerline is nearest by perpendicular distance; ties broken
// toward the lower lane id. nullopt when the nearest distance exceeds that
// lane's width (off-road).
std::optional<int> match_lane(const LaneMap& map, const Vec2& position);

// Test/fixture helper: n parallel lanes along x, lane k centered at
// y = k * width, ids 0..n-1, adjacency k <-> k+-1.
LaneMap make_parallel_lane_map(int n_lanes, double width = 3.7, double x_min = -1e4,
                               double x_max = 1e4);

} // namespace scgen
