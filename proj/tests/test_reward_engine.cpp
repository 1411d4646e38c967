#include <doctest.h>

#include <cmath>

#include "scgen/errors.hpp"
#include "scgen/reward_engine.hpp"
#include "scgen/rng.hpp"
#include "support.hpp"

using namespace scgen;
using scgen::testing::make_features;

TEST_CASE("compute_batch_stats produces population moments") {
    BatchStats s = compute_batch_stats({{1.0, 10.0}, {3.0, 14.0}});
    REQUIRE(s.mean.size() == 2);
    CHECK(s.mean[0] == doctest::Approx(2.0));
    CHECK(s.mean[1] == doctest::Approx(12.0));
    CHECK(s.var[0] == doctest::Approx(1.0));
    CHECK(s.var[1] == doctest::Approx(4.0));
    CHECK(s.count == 2);
    CHECK_THROWS_AS(compute_batch_stats({{1.0}}), ValidationError);
    CHECK_THROWS_AS(compute_batch_stats({{1.0}, {1.0, 2.0}}), ValidationError);
}

TEST_CASE("w_distance closed forms") {
    BatchStats p1{{0.0}, {1.0}, 10};
    BatchStats p2{{1.0}, {1.0}, 10};
    CHECK(w_distance(p1, p1) == 0.0);
    CHECK(w_distance(p1, p2) == doctest::Approx(1.0).epsilon(1e-12));

    BatchStats q1{{0.5}, {4.0}, 10}; // sigma = 2
    BatchStats q2{{0.5}, {1.0}, 10}; // sigma = 1
    CHECK(w_distance(q1, q2) == doctest::Approx(1.0).epsilon(1e-12));

    // symmetry and non-negativity
    BatchStats a{{0.3, -1.0}, {2.0, 0.5}, 5};
    BatchStats b{{-0.2, 0.7}, {0.25, 1.5}, 5};
    CHECK(w_distance(a, b) == w_distance(b, a));
    CHECK(w_distance(a, b) > 0.0);

    BatchStats wrong{{0.0, 0.0}, {1.0, 1.0}, 5};
    CHECK_THROWS_AS(w_distance(p1, wrong), ValidationError);
}

TEST_CASE("w_distance agrees with a Monte-Carlo transport estimate") {
    std::vector<double> mu1 = {-2.0, 1.5};
    std::vector<double> sd1 = {1.0, 0.5};
    std::vector<double> mu2 = {1.0, -1.0};
    std::vector<double> sd2 = {2.0, 1.5};
    BatchStats p1{mu1, {sd1[0] * sd1[0], sd1[1] * sd1[1]}, 100};
    BatchStats p2{mu2, {sd2[0] * sd2[0], sd2[1] * sd2[1]}, 100};
    double closed = w_distance(p1, p2);
    double mc = scgen::testing::mc_wasserstein_sq(mu1, sd1, mu2, sd2, 100000, 5);
    CHECK(std::abs(mc - closed) / closed < 0.01);
}

TEST_CASE("natural_reward clips a linear ramp") {
    CHECK(natural_reward(0.0, 0.9) == 1.0);
    CHECK(natural_reward(0.9, 0.9) == 0.0);
    CHECK(natural_reward(0.45, 0.9) == doctest::Approx(0.5));
    CHECK(natural_reward(5.0, 0.9) == 0.0);
    CHECK(natural_reward(-1.0, 0.9) == 1.0);
    // monotone non-increasing
    double prev = 2.0;
    for (double w = 0.0; w < 2.0; w += 0.1) {
        double r = natural_reward(w, 0.9);
        CHECK(r <= prev);
        prev = r;
    }
    CHECK_THROWS_AS(natural_reward(0.5, 0.0), ValidationError);
    CHECK_THROWS_AS(natural_reward(0.5, -1.0), ValidationError);
}

TEST_CASE("social_utility computes closing speeds") {
    SVOConfig cfg;
    // row: presence, x, y, vx, vy, cos, sin, priority, distance
    FeatureMatrix fm = make_features(
        4, {{1.0, 10.0, 0.0, -5.0, 0.0, 1.0, 0.0, 0.0, 10.0},    // approaching head-on
            {1.0, 0.0, 8.0, 0.0, 3.0, 1.0, 0.0, 0.0, 8.0}});      // receding
    SocialUtility u = social_utility(fm, cfg);
    REQUIRE(u.s.size() == 4);
    CHECK(u.s[0] == doctest::Approx(50.0 / (10.0 + cfg.epsilon)));
    CHECK(u.s[1] == 0.0); // receding clamps to zero
    CHECK(u.s[2] == 0.0); // masked
    CHECK(u.u_sv == doctest::Approx(u.s[0] * (cfg.beta0 + cfg.beta1 * 0.0)));
}

TEST_CASE("social_utility weighs priority vehicles double") {
    SVOConfig cfg; // beta0 = beta1 = 1
    FeatureMatrix plain = make_features(
        2, {{1.0, 10.0, 0.0, -5.0, 0.0, 1.0, 0.0, 0.0, 10.0},
            {1.0, 0.0, 10.0, 0.0, -5.0, 1.0, 0.0, 0.0, 10.0}});
    FeatureMatrix priority = plain;
    priority.data[1 * FeatureMatrix::kFeatures + 7] = 1.0;
    SocialUtility a = social_utility(plain, cfg);
    SocialUtility b = social_utility(priority, cfg);
    double s_i = a.s[1];
    CHECK(b.u_sv == doctest::Approx(a.u_sv + s_i)); // one extra weight on row 1
    CHECK(b.u_sv == doctest::Approx(a.s[0] + 2.0 * s_i));
}

TEST_CASE("svo_reward fixed and adaptive modes") {
    SVOConfig fixed;
    fixed.mode = SvoMode::fixed;
    fixed.phi = 0.0;
    SvoResult r = svo_reward(1.7, 9.9, fixed, std::nullopt);
    CHECK(r.r_svo == doctest::Approx(1.7)); // egoistic axis ignores U_sv
    CHECK(r.phi_t == 0.0);

    fixed.phi = -M_PI / 4.0;
    r = svo_reward(1.0, 1.0, fixed, std::nullopt);
    CHECK(r.r_svo == doctest::Approx(0.0).epsilon(1e-12));

    SVOConfig adaptive;
    adaptive.mode = SvoMode::adaptive;
    adaptive.lambda_phi = 0.0;
    r = svo_reward(3.0, 4.0, adaptive, std::nullopt);
    CHECK(r.r_svo == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.phi_t == doctest::Approx(std::atan2(4.0, 3.0)));
}

TEST_CASE("svo_reward smooths the adaptive angle") {
    SVOConfig cfg;
    cfg.mode = SvoMode::adaptive;
    cfg.lambda_phi = 0.9;
    // first step starts at the raw angle
    SvoResult first = svo_reward(1.0, 1.0, cfg, std::nullopt);
    CHECK(first.phi_t == doctest::Approx(M_PI / 4.0));
    // later steps blend with the carried angle
    SvoResult second = svo_reward(1.0, 0.0, cfg, first.phi_t);
    CHECK(second.phi_t == doctest::Approx(0.9 * M_PI / 4.0));
    CHECK(second.r_svo == doctest::Approx(std::cos(second.phi_t)));
}

TEST_CASE("fixed-angle ordering favors cooperation for positive utilities") {
    SVOConfig plus;
    plus.mode = SvoMode::fixed;
    plus.phi = M_PI / 4.0;
    SVOConfig minus = plus;
    minus.phi = -M_PI / 4.0;
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        double ue = rng.uniform(0.01, 5.0);
        double us = rng.uniform(0.01, 5.0);
        CHECK(svo_reward(ue, us, plus, std::nullopt).r_svo >
              svo_reward(ue, us, minus, std::nullopt).r_svo);
    }
}

TEST_CASE("u_ego normalizes adversary progress") {
    EnvState state;
    state.adversary.speed = 30.0;
    CHECK(u_ego(state) == doctest::Approx(1.0));
    state.adversary.speed = 0.0;
    CHECK(u_ego(state) == 0.0);
    state.adversary.speed = 90.0;
    CHECK(u_ego(state) == 2.0);
    state.adversary.speed = 15.0;
    CHECK(u_ego(state, 15.0) == doctest::Approx(1.0));
}

TEST_CASE("distance_reward tracks proximity against the start") {
    EnvState state;
    state.initial_distance = 10.0;
    state.ego.x = 0.0;
    state.adversary.x = 10.0;
    CHECK(distance_reward(state) == doctest::Approx(0.0));
    state.adversary.x = 5.0;
    CHECK(distance_reward(state) == doctest::Approx(0.5));
    state.adversary.x = 30.0;
    CHECK(distance_reward(state) == -1.0); // tripled distance clips
    state.initial_distance = 0.0;
    CHECK_THROWS_AS(distance_reward(state), ValidationError);
}

TEST_CASE("collision_reward enumerates the three cases") {
    CollisionReport none;
    CHECK(collision_reward(none) == 0.0);
    CollisionReport hit_ego;
    hit_ego.adv_hit_ego = true;
    CHECK(collision_reward(hit_ego) == 1.0);
    CollisionReport hit_bg;
    hit_bg.adv_hit_background = true;
    CHECK(collision_reward(hit_bg) == -1.0);
    CollisionReport both;
    both.adv_hit_ego = true;
    both.adv_hit_background = true;
    CHECK(collision_reward(both) == 1.0); // reaching the ego dominates
}

TEST_CASE("total_reward combines the channels with normalized weights") {
    RewardBreakdown parts;
    parts.r_natural = 1.0;
    RewardBreakdown out = total_reward(parts, 1.0, 6.0, 4.0);
    CHECK(out.r_adv == 0.0);
    CHECK(out.total == doctest::Approx(0.6));

    RewardBreakdown zero;
    CHECK(total_reward(zero, 1.0, 6.0, 4.0).total == 0.0);

    RewardBreakdown mix;
    mix.r_svo = 0.5;
    mix.r_dist = 0.2;
    mix.r_coll = 1.0;
    out = total_reward(mix, 1.0, 6.0, 4.0);
    CHECK(out.r_adv == doctest::Approx(1.7));
    CHECK(out.total == doctest::Approx(0.4 * 1.7));
    CHECK(out.adv_score == doctest::Approx(0.5 + 1.7));

    out = total_reward(mix, 2.0, 6.0, 4.0);
    CHECK(out.adv_score == doctest::Approx(0.5 + 2.0 * 1.7));

    CHECK_THROWS_AS(total_reward(mix, 1.0, 0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(total_reward(mix, 1.0, -1.0, 2.0), ValidationError);
}

TEST_CASE("svo config validation") {
    SVOConfig good;
    CHECK_NOTHROW(validate_svo_config(good));
    SVOConfig bad_lambda = good;
    bad_lambda.lambda_phi = 1.5;
    CHECK_THROWS_AS(validate_svo_config(bad_lambda), ValidationError);
    SVOConfig bad_eps = good;
    bad_eps.epsilon = 0.0;
    CHECK_THROWS_AS(validate_svo_config(bad_eps), ValidationError);
    SVOConfig bad_phi = good;
    bad_phi.mode = SvoMode::fixed;
    bad_phi.phi = 2.0; // outside [-pi/2, pi/2]
    CHECK_THROWS_AS(validate_svo_config(bad_phi), ValidationError);
}
