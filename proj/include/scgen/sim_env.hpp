#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scgen/lane_map.hpp"
#include "scgen/scenario.hpp"

namespace scgen {

struct VehicleState {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    double speed = 0.0;   // m/s, never negative
    double heading = 0.0; // radians
    double length = 5.0;
    double width = 2.0;
    int lane_index = -1; // -1 when off the map
    int priority = 0;    // right-of-way flag of the current lane
};

struct Action {
    static constexpr double kMaxAccel = 5.0;       // m/s^2
    static constexpr double kMaxSteer = M_PI / 4.0; // rad

    double accel = 0.0;
    double steer = 0.0;
};

Action clamp_action(const Action& a);

struct EnvState {
    size_t step_index = 0;
    double dt = 0.1;
    VehicleState ego;
    VehicleState adversary;
    std::vector<VehicleState> background;
    const Scenario* scenario = nullptr;
    double initial_distance = 0.0; // ego-adversary center distance at window start
    bool terminal = false;
};

struct FeatureMatrix {
    static constexpr size_t kFeatures = 9;
    // row layout: presence, x_rel, y_rel, vx_rel, vy_rel, cos(theta_rel),
    // sin(theta_rel), priority, distance
    size_t rows = 0;
    std::vector<double> data;  // rows * kFeatures, row-major
    std::vector<uint8_t> mask; // 1 = real vehicle, 0 = padding

    double at(size_t r, size_t f) const { return data[r * kFeatures + f]; }
};

struct CollisionReport {
    bool adv_hit_ego = false;
    bool adv_hit_background = false;
    std::vector<std::pair<std::string, std::string>> pairs;

    bool any() const { return adv_hit_ego || adv_hit_background; }
};

struct StepResult {
    CollisionReport collision;
    bool done = false;
};

struct EnvConfig {
    size_t max_vehicles = 8;     // V, feature matrix rows
    double default_length = 5.0; // fallback footprint, meters
    double default_width = 2.0;
    const LaneMap* map = nullptr; // enables adversary lane/priority refresh
    std::optional<Role> forced_adversary; // overrides the role preference order
};

// Bicycle-model step: heading advances with the current speed, the position
// advances along the new heading with the new speed. Wheelbase = 0.6 * length.
VehicleState kinematic_update(const VehicleState& v, const Action& a, double dt);

// Oriented-rectangle overlap, separating-axis test; touching counts.
bool obb_overlap(const VehicleState& a, const VehicleState& b);

// Adversary vs. ego and every background vehicle.
CollisionReport check_collisions(const EnvState& state);

// Surrounding vehicles (ego + background) in the adversary frame,
// nearest-first, truncated or zero-padded to config.max_vehicles.
FeatureMatrix encode_features(const EnvState& state, const EnvConfig& config);

// Preferred adversary: front neighbor of the ego's target lane, then the
// target-lane rear one, then the pair on the original lane. Throws
// ValidationError when the scenario has no neighbors.
Role choose_adversary_role(const Scenario& s);

// Replays a Scenario with the ego and untouched neighbors on their logged
// trajectories and one neighbor handed to policy control.
class SimEnv {
  public:
    SimEnv(Scenario scenario, EnvConfig config);

    const EnvState& reset();
    StepResult step(const Action& a); // throws ValidationError on a terminal state

    const EnvState& state() const { return state_; }
    FeatureMatrix features() const { return encode_features(state_, config_); }
    const Scenario& scenario() const { return scenario_; }
    Role adversary_role() const { return adv_role_; }
    size_t horizon() const { return n_samples_ == 0 ? 0 : n_samples_ - 1; }
    const EnvConfig& config() const { return config_; }

    // Fidelity mode: the adversary also replays its log and step() actions
    // are ignored.
    void set_adversary_replay(bool enabled) { adv_replay_ = enabled; }

  private:
    void place_at(size_t index);
    VehicleState from_sample(const Trajectory& t, size_t index, const std::string& id) const;

    Scenario scenario_;
    EnvConfig config_;
    Role adv_role_;
    std::vector<Role> bg_roles_;
    size_t n_samples_ = 0;
    bool adv_replay_ = false;
    EnvState state_;
};

struct TraceRow {
    size_t step = 0;
    std::string vehicle_id; // role-prefixed: "ego:...", "adv:...", "bg:..."
    double x = 0.0;
    double y = 0.0;
    double speed = 0.0;
    double heading = 0.0;
    bool adv_hit_ego = false;
    bool adv_hit_background = false;
};

void append_trace_rows(std::vector<TraceRow>& rows, const EnvState& state,
                       const CollisionReport& collision);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

} // namespace scgen
