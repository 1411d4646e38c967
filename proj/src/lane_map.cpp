#include "scgen/lane_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "scgen/errors.hpp"

namespace scgen {

void validate_lane_map(const LaneMap& map) {
    std::set<int> ids;
    for (const Lane& l : map.lanes) {
        if (!ids.insert(l.id).second) {
            throw ValidationError("lane map: duplicate lane id " + std::to_string(l.id));
        }
        if (l.width <= 0.0) {
            throw ValidationError("lane map: lane " + std::to_string(l.id) + " has width <= 0");
        }
        if (l.centerline.size() < 2) {
            throw ValidationError("lane map: lane " + std::to_string(l.id) +
                                  " centerline has fewer than 2 points");
        }
        if (l.priority != 0 && l.priority != 1) {
            throw ValidationError("lane map: lane " + std::to_string(l.id) +
                                  " priority must be 0 or 1");
        }
    }
    for (const Lane& l : map.lanes) {
        for (int n : l.adjacent) {
            if (!ids.count(n)) {
                throw ValidationError("lane map: lane " + std::to_string(l.id) +
                                      " adjacent to unknown lane " + std::to_string(n));
            }
            if (!map.adjacent(n, l.id)) {
                throw ValidationError("lane map: asymmetric adjacency " + std::to_string(l.id) +
                                      " -> " + std::to_string(n));
            }
        }
    }
}

LaneMap load_lane_map(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw ParseError(path, 0, "cannot open file");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
        throw ValidationError(path + ": unsupported or missing format_version");
    }
    LaneMap map;
    for (const auto& jl : j.at("lanes")) {
        Lane l;
        l.id = jl.at("id").get<int>();
        for (const auto& p : jl.at("centerline")) {
            l.centerline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        if (jl.contains("width")) l.width = jl["width"].get<double>();
        if (jl.contains("adjacent")) l.adjacent = jl["adjacent"].get<std::vector<int>>();
        if (jl.contains("priority")) l.priority = jl["priority"].get<int>();
        map.lanes.push_back(std::move(l));
    }
    validate_lane_map(map);
    return map;
}

void save_lane_map(const std::string& path, const LaneMap& map) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["lanes"] = nlohmann::ordered_json::array();
    for (const Lane& l : map.lanes) {
        nlohmann::ordered_json jl;
        jl["id"] = l.id;
        jl["centerline"] = nlohmann::ordered_json::array();
        for (const Vec2& p : l.centerline) {
            jl["centerline"].push_back({p.x, p.y});
        }
        jl["width"] = l.width;
        jl["adjacent"] = l.adjacent;
        jl["priority"] = l.priority;
        j["lanes"].push_back(std::move(jl));
    }
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

std::optional<int> match_lane(const LaneMap& map, const Vec2& position) {
    if (map.lanes.empty()) {
        throw ValidationError("match_lane: empty lane map");
    }
    if (!std::isfinite(position.x) || !std::isfinite(position.y)) {
        throw ValidationError("match_lane: non-finite position");
    }
    const Lane* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const Lane& l : map.lanes) {
        double d = point_polyline_distance(position, l.centerline);
        if (d < best_dist || (d == best_dist && best && l.id < best->id)) {
            best_dist = d;
            best = &l;
        }
    }
    if (!best || best_dist > best->width) return std::nullopt;
    return best->id;
}

LaneMap make_parallel_lane_map(int n_lanes, double width, double x_min, double x_max) {
    LaneMap map;
    for (int k = 0; k < n_lanes; ++k) {
        Lane l;
        l.id = k;
        l.width = width;
        l.centerline = {{x_min, width * k}, {x_max, width * k}};
        if (k > 0) l.adjacent.push_back(k - 1);
        if (k + 1 < n_lanes) l.adjacent.push_back(k + 1);
        map.lanes.push_back(std::move(l));
    }
    return map;
}

} // namespace scgen
