#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <variant>

#include <json.hpp>

#include "scgen/errors.hpp"
#include "scgen/scenario.hpp"
#include "support.hpp"

using namespace scgen;
using scgen::testing::TempDir;

namespace {

Trajectory labeled_trajectory(const std::vector<int>& lanes, double dt = 0.1) {
    Trajectory t;
    t.vehicle_id = "v";
    for (size_t i = 0; i < lanes.size(); ++i) {
        TrajectorySample s;
        s.time = static_cast<double>(i) * dt;
        s.x = 20.0 * s.time;
        s.y = 3.7 * lanes[i];
        s.speed = 20.0;
        s.lane = lanes[i];
        t.samples.push_back(s);
    }
    return t;
}

} // namespace

TEST_CASE("detect_lane_changes finds single adjacent flips") {
    LaneMap map = make_parallel_lane_map(3);
    Trajectory t = labeled_trajectory({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    auto events = detect_lane_changes(t, map);
    REQUIRE(events.size() == 1);
    CHECK(events[0].vehicle_id == "v");
    CHECK(events[0].change_frame == 5);
    CHECK(events[0].prev_lane == 0);
    CHECK(events[0].new_lane == 1);
}

TEST_CASE("detect_lane_changes collapses jitter chains onto the first flip") {
    LaneMap map = make_parallel_lane_map(3);
    // flips at t=0.5, 1.2 (within debounce of the first), then 2.5 (clear)
    std::vector<int> lanes(30, 0);
    for (size_t i = 5; i < 12; ++i) lanes[i] = 1;
    for (size_t i = 12; i < 25; ++i) lanes[i] = 0;
    for (size_t i = 25; i < 30; ++i) lanes[i] = 1;
    auto events = detect_lane_changes(labeled_trajectory(lanes), map, 1.0);
    REQUIRE(events.size() == 2);
    CHECK(events[0].change_frame == 5);
    CHECK(events[1].change_frame == 25);
}

TEST_CASE("detect_lane_changes ignores non-adjacent jumps") {
    LaneMap map = make_parallel_lane_map(3);
    auto events = detect_lane_changes(labeled_trajectory({0, 0, 2, 2, 2}), map);
    CHECK(events.empty());
}

TEST_CASE("find_neighbors maps the four slots by change direction") {
    LaneMap map = make_parallel_lane_map(3);
    // left change (1 -> 0): the new lane's pair takes the LF/LB slots
    Trajectory ego = labeled_trajectory({1, 1, 0, 0});
    LaneChangeEvent event{"v", 2, 1, 0};
    double t_c = ego.samples[2].time;
    double ego_x = ego.samples[2].x;

    auto passer = [&](const std::string& id, double x, int lane) {
        Trajectory n;
        n.vehicle_id = id;
        for (int i = 0; i < 4; ++i) {
            TrajectorySample s;
            s.time = 0.1 * i;
            s.x = x;
            s.y = 3.7 * lane;
            s.lane = lane;
            n.samples.push_back(s);
        }
        return n;
    };
    std::vector<Trajectory> corpus = {ego,
                                      passer("new_front", ego_x + 10.0, 0),
                                      passer("new_front_far", ego_x + 25.0, 0),
                                      passer("new_back", ego_x - 8.0, 0),
                                      passer("old_front", ego_x + 12.0, 1),
                                      passer("old_back", ego_x - 9.0, 1),
                                      passer("other_lane", ego_x + 1.0, 2)};
    (void)t_c;

    NeighborSet nb = find_neighbors(event, ego, corpus, map);
    REQUIRE(nb[Role::lf].has_value());
    CHECK(*nb[Role::lf] == "new_front"); // nearest ahead wins
    CHECK(*nb[Role::lb] == "new_back");
    CHECK(*nb[Role::rf] == "old_front");
    CHECK(*nb[Role::rb] == "old_back");

    // right change (0 -> 1) mirrors the slots
    Trajectory ego_r = labeled_trajectory({0, 0, 1, 1});
    NeighborSet nbr = find_neighbors({"v", 2, 0, 1}, ego_r, corpus, map);
    CHECK(*nbr[Role::rf] == "new_front");
    CHECK(*nbr[Role::rb] == "new_back");
    CHECK(*nbr[Role::lf] == "old_front");
    CHECK(*nbr[Role::lb] == "old_back");
}

TEST_CASE("find_neighbors skips vehicles absent at the change time") {
    LaneMap map = make_parallel_lane_map(3);
    Trajectory ego = labeled_trajectory({1, 1, 0, 0});
    Trajectory late;
    late.vehicle_id = "late";
    for (int i = 0; i < 4; ++i) {
        TrajectorySample s;
        s.time = 100.0 + 0.1 * i;
        s.x = ego.samples[2].x + 5.0;
        s.y = 0.0;
        s.lane = 0;
        late.samples.push_back(s);
    }
    NeighborSet nb = find_neighbors({"v", 2, 1, 0}, ego, {ego, late}, map);
    CHECK(nb.empty());
}

TEST_CASE("clean_and_window rejects boundary change frames") {
    LaneMap map = make_parallel_lane_map(3);
    Trajectory ego = labeled_trajectory({0, 1, 1, 1});
    (void)map;
    auto result = clean_and_window({"v", 0, 0, 1}, ego, {}, {ego}, MinerConfig{});
    REQUIRE(std::holds_alternative<Rejection>(result));
    CHECK(std::get<Rejection>(result).kind == Rejection::Kind::coverage);
}

TEST_CASE("mine_corpus separates planted classes") {
    auto corpus = scgen::testing::make_planted_corpus({6, 2, 1, 1, 1});
    MiningResult result = mine_corpus(corpus.trajectories, corpus.map, MinerConfig{});

    CHECK(result.stats.candidates == 11);
    CHECK(result.stats.accepted == 6);
    CHECK(result.stats.rejections.at("coverage") == 3); // short neighbor + no neighbor
    CHECK(result.stats.rejections.at("outlier") == 2);  // overspeed + teleport
    CHECK(result.stats.conversion_rate() == doctest::Approx(6.0 / 11.0));

    std::set<std::string> got;
    for (const Scenario& s : result.catalog) {
        got.insert(s.event.vehicle_id);
        validate_scenario(s);
        CHECK(s.ego.samples.size() == 41); // 2 s half-window at dt 0.1
        CHECK(s.neighbors.size() == 1);
    }
    std::set<std::string> want(corpus.expected_pass_ids.begin(), corpus.expected_pass_ids.end());
    CHECK(got == want);
}

TEST_CASE("mine_corpus populates every neighbor role across the corpus") {
    auto corpus = scgen::testing::make_planted_corpus({8, 0, 0, 0, 0});
    MiningResult result = mine_corpus(corpus.trajectories, corpus.map, MinerConfig{});
    REQUIRE(result.stats.accepted == 8);
    for (size_t r = 0; r < 4; ++r) {
        CHECK(result.stats.role_counts[r] > 0);
    }
}

TEST_CASE("mine_corpus drops gapped source trajectories") {
    auto corpus = scgen::testing::make_planted_corpus({2, 0, 0, 0, 0});
    Trajectory gapped;
    gapped.vehicle_id = "zz_gap";
    gapped.samples = {{0.0, 0.0, 0.0, 20.0, 0.0, {}}, {5.0, 100.0, 0.0, 20.0, 0.0, {}}};
    corpus.trajectories.push_back(gapped);
    MiningResult result = mine_corpus(corpus.trajectories, corpus.map, MinerConfig{});
    CHECK(result.stats.dropped_trajectories == 1);
    CHECK(result.stats.accepted == 2);
}

TEST_CASE("catalog JSONL round trip preserves every field") {
    TempDir dir;
    auto corpus = scgen::testing::make_planted_corpus({3, 0, 0, 0, 0});
    MiningResult result = mine_corpus(corpus.trajectories, corpus.map, MinerConfig{});
    REQUIRE(result.catalog.size() == 3);

    write_catalog(dir.file("catalog.jsonl"), result.catalog);
    auto loaded = read_catalog(dir.file("catalog.jsonl"));
    REQUIRE(loaded.size() == result.catalog.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        const Scenario& a = result.catalog[i];
        const Scenario& b = loaded[i];
        CHECK(a.scenario_id == b.scenario_id);
        CHECK(a.source == b.source);
        CHECK(a.t_start == b.t_start);
        CHECK(a.dt == b.dt);
        CHECK(a.event.change_frame == b.event.change_frame);
        CHECK(a.event.prev_lane == b.event.prev_lane);
        CHECK(a.event.new_lane == b.event.new_lane);
        REQUIRE(a.neighbors.size() == b.neighbors.size());
        REQUIRE(a.ego.samples.size() == b.ego.samples.size());
        for (size_t j = 0; j < a.ego.samples.size(); ++j) {
            CHECK(a.ego.samples[j].time == b.ego.samples[j].time);
            CHECK(a.ego.samples[j].x == b.ego.samples[j].x);
            CHECK(a.ego.samples[j].y == b.ego.samples[j].y);
            CHECK(a.ego.samples[j].lane == b.ego.samples[j].lane);
        }
        validate_scenario(b);
    }
}

TEST_CASE("read_catalog rejects malformed lines") {
    TempDir dir;
    {
        std::ofstream out(dir.file("bad.jsonl"));
        out << "not json\n";
    }
    CHECK_THROWS_AS(read_catalog(dir.file("bad.jsonl")), ParseError);
    {
        std::ofstream out(dir.file("v9.jsonl"));
        out << "{\"schema_version\": 9}\n";
    }
    CHECK_THROWS_AS(read_catalog(dir.file("v9.jsonl")), SchemaError);
    CHECK_THROWS_AS(read_catalog(dir.file("absent.jsonl")), ArtifactError);
}

TEST_CASE("validate_scenario rejects broken grids and events") {
    auto catalog = scgen::testing::make_pursuit_catalog(1);
    Scenario good = catalog[0];
    validate_scenario(good);

    Scenario off_grid = good;
    off_grid.neighbors.begin()->second.samples[3].time += 0.01;
    CHECK_THROWS_AS(validate_scenario(off_grid), ValidationError);

    Scenario truncated = good;
    truncated.neighbors.begin()->second.samples.pop_back();
    CHECK_THROWS_AS(validate_scenario(truncated), ValidationError);

    Scenario same_id = good;
    same_id.neighbors.begin()->second.vehicle_id = same_id.ego.vehicle_id;
    CHECK_THROWS_AS(validate_scenario(same_id), ValidationError);

    Scenario wrong_frame = good;
    wrong_frame.event.change_frame = 5;
    CHECK_THROWS_AS(validate_scenario(wrong_frame), ValidationError);
}

TEST_CASE("mining stats serialize to json and a table") {
    auto corpus = scgen::testing::make_planted_corpus({2, 1, 0, 0, 0});
    MiningResult result = mine_corpus(corpus.trajectories, corpus.map, MinerConfig{});
    auto j = nlohmann::json::parse(mining_stats_json(result.stats));
    CHECK(j["candidates"] == 3);
    CHECK(j["accepted"] == 2);
    CHECK(j["rejections"]["coverage"] == 1);
    std::string table = mining_stats_table(result.stats);
    CHECK(table.find("candidates") != std::string::npos);
    CHECK(table.find("conversion rate") != std::string::npos);
}
