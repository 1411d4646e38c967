#pragma once

#include <string>
#include <vector>

#include "scgen/geometry.hpp"
#include "scgen/lane_map.hpp"
#include "scgen/scenario.hpp"
#include "scgen/scppo.hpp"

namespace scgen {

// One drawable trajectory. cls selects the stroke class and must be one of
// "ego", "adversary", "background".
struct PlanPath {
    std::string label;
    std::string cls;
    std::vector<Vec2> points;
};

// Top-down trajectory plot with lane centerlines clipped to the data extent,
// start/end markers, and a legend. Pure function of its inputs; numbers are
// shortest-round-trip formatted so output is byte-stable.
std::string plan_view_svg(const std::vector<PlanPath>& paths, const LaneMap* map);

// Paths for a logged scenario: ego, the default adversary role, and the
// remaining neighbors.
std::vector<PlanPath> scenario_paths(const Scenario& s);

// Small-multiple training curves (reward, adversarial score, distribution
// distance, collision rate) against iteration.
std::string metrics_svg(const std::vector<IterationMetrics>& history);

} // namespace scgen
