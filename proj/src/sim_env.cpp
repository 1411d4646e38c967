#include "scgen/sim_env.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "scgen/errors.hpp"
#include "scgen/geometry.hpp"
#include "scgen/num_format.hpp"

namespace scgen {

Action clamp_action(const Action& a) {
    Action out = a;
    out.accel = std::clamp(out.accel, -Action::kMaxAccel, Action::kMaxAccel);
    out.steer = std::clamp(out.steer, -Action::kMaxSteer, Action::kMaxSteer);
    return out;
}

VehicleState kinematic_update(const VehicleState& v, const Action& a_in, double dt) {
    Action a = clamp_action(a_in);
    VehicleState out = v;
    double wheelbase = 0.6 * v.length;
    double new_heading = wrap_angle(v.heading + (v.speed / wheelbase) * std::tan(a.steer) * dt);
    double new_speed = std::max(0.0, v.speed + a.accel * dt);
    out.heading = new_heading;
    out.speed = new_speed;
    out.x = v.x + new_speed * std::cos(new_heading) * dt;
    out.y = v.y + new_speed * std::sin(new_heading) * dt;
    return out;
}

namespace {

std::array<Vec2, 4> obb_corners(const VehicleState& v) {
    double c = std::cos(v.heading);
    double s = std::sin(v.heading);
    Vec2 fwd{c * v.length * 0.5, s * v.length * 0.5};
    Vec2 side{-s * v.width * 0.5, c * v.width * 0.5};
    Vec2 center{v.x, v.y};
    return {center + fwd + side, center + fwd - side, center - fwd - side, center - fwd + side};
}

bool separated_on_axis(const Vec2& axis, const std::array<Vec2, 4>& a,
                       const std::array<Vec2, 4>& b) {
    double a_min = std::numeric_limits<double>::infinity();
    double a_max = -a_min;
    double b_min = a_min;
    double b_max = -a_min;
    for (const Vec2& p : a) {
        double d = p.dot(axis);
        a_min = std::min(a_min, d);
        a_max = std::max(a_max, d);
    }
    for (const Vec2& p : b) {
        double d = p.dot(axis);
        b_min = std::min(b_min, d);
        b_max = std::max(b_max, d);
    }
    return a_max < b_min || b_max < a_min;
}

} // namespace

bool obb_overlap(const VehicleState& a, const VehicleState& b) {
    auto ca = obb_corners(a);
    auto cb = obb_corners(b);
    std::array<Vec2, 4> axes = {
        Vec2{std::cos(a.heading), std::sin(a.heading)},
        Vec2{-std::sin(a.heading), std::cos(a.heading)},
        Vec2{std::cos(b.heading), std::sin(b.heading)},
        Vec2{-std::sin(b.heading), std::cos(b.heading)},
    };
    for (const Vec2& axis : axes) {
        if (separated_on_axis(axis, ca, cb)) return false;
    }
    return true;
}

CollisionReport check_collisions(const EnvState& state) {
    CollisionReport report;
    if (obb_overlap(state.adversary, state.ego)) {
        report.adv_hit_ego = true;
        report.pairs.emplace_back(state.adversary.id, state.ego.id);
    }
    for (const VehicleState& bg : state.background) {
        if (obb_overlap(state.adversary, bg)) {
            report.adv_hit_background = true;
            report.pairs.emplace_back(state.adversary.id, bg.id);
        }
    }
    return report;
}

FeatureMatrix encode_features(const EnvState& state, const EnvConfig& config) {
    const VehicleState& adv = state.adversary;
    double c = std::cos(adv.heading);
    double s = std::sin(adv.heading);
    double adv_vx = adv.speed * c;
    double adv_vy = adv.speed * s;

    struct Row {
        double dist;
        size_t order;
        std::array<double, FeatureMatrix::kFeatures> f;
    };
    std::vector<Row> rows;
    size_t order = 0;
    auto add = [&](const VehicleState& v) {
        double dx = v.x - adv.x;
        double dy = v.y - adv.y;
        double x_rel = c * dx + s * dy;
        double y_rel = -s * dx + c * dy;
        double vx = v.speed * std::cos(v.heading) - adv_vx;
        double vy = v.speed * std::sin(v.heading) - adv_vy;
        double vx_rel = c * vx + s * vy;
        double vy_rel = -s * vx + c * vy;
        double theta = wrap_angle(v.heading - adv.heading);
        double dist = std::hypot(x_rel, y_rel);
        rows.push_back({dist,
                        order++,
                        {1.0, x_rel, y_rel, vx_rel, vy_rel, std::cos(theta), std::sin(theta),
                         static_cast<double>(v.priority), dist}});
    };
    add(state.ego);
    for (const VehicleState& bg : state.background) add(bg);

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.order < b.order;
    });

    FeatureMatrix out;
    out.rows = config.max_vehicles;
    out.data.assign(out.rows * FeatureMatrix::kFeatures, 0.0);
    out.mask.assign(out.rows, 0);
    size_t n = std::min(rows.size(), out.rows);
    for (size_t r = 0; r < n; ++r) {
        out.mask[r] = 1;
        for (size_t f = 0; f < FeatureMatrix::kFeatures; ++f) {
            out.data[r * FeatureMatrix::kFeatures + f] = rows[r].f[f];
        }
    }
    return out;
}

Role choose_adversary_role(const Scenario& s) {
    if (s.neighbors.empty()) {
        throw ValidationError("scenario " + s.scenario_id + " has no neighbors to control");
    }
    bool left_change = s.event.new_lane < s.event.prev_lane;
    std::array<Role, 4> order = left_change
                                    ? std::array<Role, 4>{Role::lf, Role::lb, Role::rf, Role::rb}
                                    : std::array<Role, 4>{Role::rf, Role::rb, Role::lf, Role::lb};
    for (Role r : order) {
        if (s.neighbors.count(r)) return r;
    }
    return s.neighbors.begin()->first;
}

SimEnv::SimEnv(Scenario scenario, EnvConfig config)
    : scenario_(std::move(scenario)), config_(config),
      adv_role_(config.forced_adversary ? *config.forced_adversary
                                        : choose_adversary_role(scenario_)) {
    if (!scenario_.neighbors.count(adv_role_)) {
        throw ValidationError("scenario " + scenario_.scenario_id + " has no neighbor in role " +
                              role_name(adv_role_));
    }
    validate_scenario(scenario_);
    n_samples_ = scenario_.ego.samples.size();
    for (Role r : kAllRoles) {
        if (r != adv_role_ && scenario_.neighbors.count(r)) bg_roles_.push_back(r);
    }
    reset();
}

VehicleState SimEnv::from_sample(const Trajectory& t, size_t index, const std::string& id) const {
    const TrajectorySample& s = t.samples[index];
    VehicleState v;
    v.id = id;
    v.x = s.x;
    v.y = s.y;
    v.speed = std::max(0.0, s.speed);
    v.heading = s.heading;
    v.length = t.length > 0.0 ? t.length : config_.default_length;
    v.width = t.width > 0.0 ? t.width : config_.default_width;
    v.lane_index = s.lane.value_or(-1);
    v.priority = (config_.map && s.lane) ? config_.map->priority_of(*s.lane) : 0;
    return v;
}

void SimEnv::place_at(size_t index) {
    state_.ego = from_sample(scenario_.ego, index, scenario_.ego.vehicle_id);
    state_.background.clear();
    for (Role r : bg_roles_) {
        const Trajectory& t = scenario_.neighbors.at(r);
        state_.background.push_back(from_sample(t, index, t.vehicle_id));
    }
}

const EnvState& SimEnv::reset() {
    state_ = EnvState{};
    state_.dt = scenario_.dt;
    state_.scenario = &scenario_;
    place_at(0);
    const Trajectory& adv_t = scenario_.neighbors.at(adv_role_);
    state_.adversary = from_sample(adv_t, 0, adv_t.vehicle_id);
    state_.initial_distance =
        std::hypot(state_.adversary.x - state_.ego.x, state_.adversary.y - state_.ego.y);
    state_.step_index = 0;
    state_.terminal = n_samples_ < 2;
    return state_;
}

StepResult SimEnv::step(const Action& a) {
    if (state_.terminal) {
        throw ValidationError("step() called on a terminal environment");
    }
    size_t next = state_.step_index + 1;
    place_at(next);
    if (adv_replay_) {
        const Trajectory& adv_t = scenario_.neighbors.at(adv_role_);
        state_.adversary = from_sample(adv_t, next, adv_t.vehicle_id);
    } else {
        state_.adversary = kinematic_update(state_.adversary, a, state_.dt);
        if (config_.map) {
            auto lane = match_lane(*config_.map, {state_.adversary.x, state_.adversary.y});
            if (lane) {
                state_.adversary.lane_index = *lane;
                state_.adversary.priority = config_.map->priority_of(*lane);
            }
        }
    }
    state_.step_index = next;

    StepResult result;
    result.collision = check_collisions(state_);
    result.done = result.collision.any() || next + 1 >= n_samples_;
    state_.terminal = result.done;
    return result;
}

void append_trace_rows(std::vector<TraceRow>& rows, const EnvState& state,
                       const CollisionReport& collision) {
    auto push = [&](const char* prefix, const VehicleState& v) {
        TraceRow row;
        row.step = state.step_index;
        row.vehicle_id = std::string(prefix) + v.id;
        row.x = v.x;
        row.y = v.y;
        row.speed = v.speed;
        row.heading = v.heading;
        row.adv_hit_ego = collision.adv_hit_ego;
        row.adv_hit_background = collision.adv_hit_background;
        rows.push_back(std::move(row));
    };
    push("ego:", state.ego);
    push("adv:", state.adversary);
    for (const VehicleState& bg : state.background) push("bg:", bg);
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open trace for writing: " + path);
    out << "step,vehicle_id,x,y,speed,heading,adv_hit_ego,adv_hit_background\n";
    for (const TraceRow& r : rows) {
        out << r.step << ',' << r.vehicle_id << ',' << fmt_double(r.x) << ',' << fmt_double(r.y)
            << ',' << fmt_double(r.speed) << ',' << fmt_double(r.heading) << ','
            << (r.adv_hit_ego ? 1 : 0) << ',' << (r.adv_hit_background ? 1 : 0) << "\n";
    }
    if (!out.good()) throw ArtifactError("write failed: " + path);
}

} // namespace scgen
