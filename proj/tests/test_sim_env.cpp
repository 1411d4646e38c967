#include <doctest.h>

#include <cmath>
#include <fstream>

#include "scgen/errors.hpp"
#include "scgen/sim_env.hpp"
#include "support.hpp"

using namespace scgen;
using scgen::testing::TempDir;

namespace {

VehicleState vehicle(double x, double y, double speed = 0.0, double heading = 0.0,
                     double length = 5.0, double width = 2.0) {
    VehicleState v;
    v.id = "t";
    v.x = x;
    v.y = y;
    v.speed = speed;
    v.heading = heading;
    v.length = length;
    v.width = width;
    return v;
}

} // namespace

TEST_CASE("clamp_action enforces the control box") {
    Action a{9.0, -2.0};
    Action c = clamp_action(a);
    CHECK(c.accel == Action::kMaxAccel);
    CHECK(c.steer == -Action::kMaxSteer);
    Action inside{1.0, 0.1};
    Action ci = clamp_action(inside);
    CHECK(ci.accel == 1.0);
    CHECK(ci.steer == 0.1);
}

TEST_CASE("kinematic_update integrates straight-line acceleration") {
    VehicleState v = vehicle(0.0, 0.0, 10.0);
    VehicleState out = kinematic_update(v, {2.0, 0.0}, 0.1);
    CHECK(out.speed == doctest::Approx(10.2));
    CHECK(out.heading == doctest::Approx(0.0));
    CHECK(out.x == doctest::Approx(10.2 * 0.1));
    CHECK(out.y == doctest::Approx(0.0));
}

TEST_CASE("kinematic_update turns with the bicycle rate") {
    VehicleState v = vehicle(0.0, 0.0, 10.0);
    double steer = 0.2;
    VehicleState out = kinematic_update(v, {0.0, steer}, 0.1);
    double expected_heading = (10.0 / (0.6 * 5.0)) * std::tan(steer) * 0.1;
    CHECK(out.heading == doctest::Approx(expected_heading));
    CHECK(out.x == doctest::Approx(10.0 * std::cos(expected_heading) * 0.1));
    CHECK(out.y == doctest::Approx(10.0 * std::sin(expected_heading) * 0.1));
}

TEST_CASE("kinematic_update floors speed at zero and holds heading when stopped") {
    VehicleState v = vehicle(3.0, 4.0, 0.5, 0.7);
    VehicleState out = kinematic_update(v, {-5.0, 0.3}, 0.1);
    CHECK(out.speed == 0.0);
    CHECK(out.x == 3.0);
    CHECK(out.y == 4.0);

    VehicleState stopped = vehicle(0.0, 0.0, 0.0, 0.7);
    VehicleState still = kinematic_update(stopped, {0.0, 0.4}, 0.1);
    CHECK(still.heading == doctest::Approx(0.7)); // no speed, no yaw rate
}

TEST_CASE("obb_overlap separates, overlaps, and counts touching") {
    VehicleState a = vehicle(0.0, 0.0);
    CHECK(obb_overlap(a, vehicle(4.0, 0.0)));        // 1 m of overlap
    CHECK_FALSE(obb_overlap(a, vehicle(6.0, 0.0)));  // 1 m of clearance
    CHECK(obb_overlap(a, vehicle(5.0, 0.0)));        // exactly touching
    CHECK(obb_overlap(a, vehicle(0.0, 2.0)));        // touching sideways
    CHECK_FALSE(obb_overlap(a, vehicle(0.0, 2.1)));

    // a 45-degree vehicle projects shorter onto x than an aligned one:
    // corner reach 2.5 cos45 + 1.0 sin45 = 2.475 < 2.5
    CHECK(obb_overlap(a, vehicle(4.99, 0.0, 0.0, 0.0)));
    CHECK_FALSE(obb_overlap(a, vehicle(4.99, 0.0, 0.0, M_PI / 4.0)));
}

TEST_CASE("check_collisions reports adversary contacts only") {
    EnvState state;
    state.ego = vehicle(0.0, 0.0);
    state.ego.id = "ego";
    state.adversary = vehicle(4.0, 0.0);
    state.adversary.id = "adv";
    VehicleState bg = vehicle(100.0, 0.0);
    bg.id = "bg";
    state.background = {bg};

    CollisionReport rep = check_collisions(state);
    CHECK(rep.adv_hit_ego);
    CHECK_FALSE(rep.adv_hit_background);
    REQUIRE(rep.pairs.size() == 1);
    CHECK(rep.pairs[0].first == "adv");

    state.background[0].x = 7.0; // close enough to the adversary
    rep = check_collisions(state);
    CHECK(rep.adv_hit_background);
    CHECK(rep.any());
}

TEST_CASE("encode_features expresses surroundings in the adversary frame") {
    EnvState state;
    state.adversary = vehicle(10.0, 5.0, 2.0, M_PI / 2.0); // facing +y
    state.adversary.id = "adv";
    state.ego = vehicle(10.0, 15.0, 3.0, M_PI / 2.0);      // 10 m ahead of it
    state.ego.id = "ego";
    EnvConfig config;
    config.max_vehicles = 4;

    FeatureMatrix fm = encode_features(state, config);
    REQUIRE(fm.rows == 4);
    CHECK(fm.mask[0] == 1);
    CHECK(fm.mask[1] == 0);
    CHECK(fm.at(0, 0) == 1.0);                       // presence
    CHECK(fm.at(0, 1) == doctest::Approx(10.0));     // ahead = +x in body frame
    CHECK(fm.at(0, 2) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fm.at(0, 3) == doctest::Approx(1.0));      // closing +1 m/s along +x
    CHECK(fm.at(0, 5) == doctest::Approx(1.0));      // same heading
    CHECK(fm.at(0, 6) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fm.at(0, 8) == doctest::Approx(10.0));     // distance
    // padding rows are zero
    for (size_t f = 0; f < FeatureMatrix::kFeatures; ++f) CHECK(fm.at(2, f) == 0.0);
}

TEST_CASE("encode_features orders nearest-first and truncates") {
    EnvState state;
    state.adversary = vehicle(0.0, 0.0);
    state.ego = vehicle(30.0, 0.0);
    state.ego.id = "ego";
    VehicleState near_bg = vehicle(5.0, 0.0);
    near_bg.id = "near";
    VehicleState far_bg = vehicle(60.0, 0.0);
    far_bg.id = "far";
    state.background = {far_bg, near_bg};

    EnvConfig config;
    config.max_vehicles = 2;
    FeatureMatrix fm = encode_features(state, config);
    CHECK(fm.at(0, 8) == doctest::Approx(5.0));   // nearest background first
    CHECK(fm.at(1, 8) == doctest::Approx(30.0));  // ego second; far one truncated
    CHECK(fm.mask[0] == 1);
    CHECK(fm.mask[1] == 1);
}

TEST_CASE("choose_adversary_role prefers the target-lane front neighbor") {
    auto catalog = scgen::testing::make_pursuit_catalog(1);
    Scenario s = catalog[0]; // left change with only LB present
    CHECK(choose_adversary_role(s) == Role::lb);

    Scenario with_front = s;
    Trajectory front = s.neighbors.at(Role::lb);
    front.vehicle_id = "front";
    for (auto& sample : front.samples) sample.x += 30.0;
    with_front.neighbors.emplace(Role::lf, front);
    CHECK(choose_adversary_role(with_front) == Role::lf);

    Scenario none = s;
    none.neighbors.clear();
    CHECK_THROWS_AS(choose_adversary_role(none), ValidationError);
}

TEST_CASE("SimEnv replays the scenario and hands the adversary to control") {
    auto catalog = scgen::testing::make_pursuit_catalog(2);
    Scenario s = catalog[0];
    EnvConfig config;
    config.max_vehicles = 4;
    SimEnv env(s, config);

    CHECK(env.adversary_role() == Role::lb);
    CHECK(env.horizon() == 40);
    const EnvState& st = env.reset();
    CHECK(st.step_index == 0);
    CHECK(st.initial_distance > 0.0);
    CHECK(st.ego.x == doctest::Approx(s.ego.samples[0].x));
    CHECK(st.adversary.x == doctest::Approx(s.neighbors.at(Role::lb).samples[0].x));

    // coasting with zero action: adversary keeps speed, ego follows its log
    StepResult r = env.step({0.0, 0.0});
    CHECK_FALSE(r.done);
    CHECK(env.state().step_index == 1);
    CHECK(env.state().ego.x == doctest::Approx(s.ego.samples[1].x));
    double v0 = s.neighbors.at(Role::lb).samples[0].speed;
    CHECK(env.state().adversary.speed == doctest::Approx(v0));

    size_t steps = 1;
    while (!env.state().terminal) {
        r = env.step({0.0, 0.0});
        ++steps;
    }
    CHECK(steps <= env.horizon());
    CHECK_THROWS_AS(env.step({0.0, 0.0}), ValidationError);
}

TEST_CASE("SimEnv replay mode reproduces the logged adversary") {
    auto catalog = scgen::testing::make_pursuit_catalog(1);
    Scenario s = catalog[0];
    SimEnv env(s, EnvConfig{});
    env.set_adversary_replay(true);
    env.reset();
    const Trajectory& log = s.neighbors.at(Role::lb);
    for (size_t i = 1; i < 10; ++i) {
        env.step({5.0, 0.5}); // ignored in replay mode
        CHECK(env.state().adversary.x == doctest::Approx(log.samples[i].x));
        CHECK(env.state().adversary.y == doctest::Approx(log.samples[i].y));
    }
}

TEST_CASE("SimEnv honors a forced adversary role") {
    auto catalog = scgen::testing::make_pursuit_catalog(1);
    EnvConfig config;
    config.forced_adversary = Role::lf;
    CHECK_THROWS_AS(SimEnv(catalog[0], config), ValidationError);
    config.forced_adversary = Role::lb;
    SimEnv env(catalog[0], config);
    CHECK(env.adversary_role() == Role::lb);
}

TEST_CASE("collision ends the episode") {
    auto catalog = scgen::testing::make_pursuit_catalog(1);
    SimEnv env(catalog[0], EnvConfig{});
    env.reset();
    bool collided = false;
    while (!env.state().terminal) {
        StepResult r = env.step({Action::kMaxAccel, 0.0}); // floor it
        if (r.collision.adv_hit_ego) {
            collided = true;
            CHECK(r.done);
        }
    }
    CHECK(collided); // an 8 m gap closes within the horizon at full throttle
}

TEST_CASE("trace rows carry role prefixes and collision flags") {
    auto catalog = scgen::testing::make_pursuit_catalog(1);
    SimEnv env(catalog[0], EnvConfig{});
    env.reset();
    std::vector<TraceRow> rows;
    append_trace_rows(rows, env.state(), CollisionReport{});
    REQUIRE(rows.size() == 2); // ego + adversary, no background here
    CHECK(rows[0].vehicle_id.substr(0, 4) == "ego:");
    CHECK(rows[1].vehicle_id.substr(0, 4) == "adv:");

    TempDir dir;
    write_trace_csv(dir.file("trace.csv"), rows);
    std::string text = scgen::testing::read_file(dir.file("trace.csv"));
    CHECK(text.find("step,vehicle_id,x,y,speed,heading") != std::string::npos);
    CHECK(text.find("ego:") != std::string::npos);
}
