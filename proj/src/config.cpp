#include "scgen/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scgen/errors.hpp"
#include "scgen/policy_core.hpp"
#include "scgen/rng.hpp"

namespace scgen {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const std::string& what) {
    throw ConfigError(section.empty() ? key : section + "." + key, what);
}

double as_double(const nlohmann::json& v, const std::string& section, const std::string& key) {
    if (!v.is_number()) bad_key(section, key, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) bad_key(section, key, "must be finite");
    return d;
}

size_t as_size(const nlohmann::json& v, const std::string& section, const std::string& key) {
    if (!v.is_number_integer() || v.get<int64_t>() < 0)
        bad_key(section, key, "expected a non-negative integer");
    return static_cast<size_t>(v.get<int64_t>());
}

uint64_t as_u64(const nlohmann::json& v, const std::string& section, const std::string& key) {
    if (!v.is_number_integer() || v.get<int64_t>() < 0)
        bad_key(section, key, "expected a non-negative integer");
    return v.get<uint64_t>();
}

std::string as_string(const nlohmann::json& v, const std::string& section,
                      const std::string& key) {
    if (!v.is_string()) bad_key(section, key, "expected a string");
    return v.get<std::string>();
}

void parse_trainer(const nlohmann::json& obj, TrainerConfig& out) {
    for (const auto& [key, v] : obj.items()) {
        if (key == "lr_ppo") out.lr_ppo = as_double(v, "trainer", key);
        else if (key == "batch_ppo") out.batch_ppo = as_size(v, "trainer", key);
        else if (key == "lr_gail") out.lr_gail = as_double(v, "trainer", key);
        else if (key == "batch_gail") out.batch_gail = as_size(v, "trainer", key);
        else if (key == "alpha") out.alpha = as_double(v, "trainer", key);
        else if (key == "gamma") out.gamma = as_double(v, "trainer", key);
        else if (key == "eps_clip") out.eps_clip = as_double(v, "trainer", key);
        else if (key == "gae_lambda") out.gae_lambda = as_double(v, "trainer", key);
        else if (key == "reset_interval") out.reset_interval = as_size(v, "trainer", key);
        else if (key == "reset_layers") out.reset_layers = as_size(v, "trainer", key);
        else if (key == "replay_capacity") out.replay_capacity = as_size(v, "trainer", key);
        else if (key == "workers") out.workers = as_size(v, "trainer", key);
        else if (key == "iterations") out.iterations = as_size(v, "trainer", key);
        else if (key == "epochs") out.epochs = as_size(v, "trainer", key);
        else if (key == "minibatch") out.minibatch = as_size(v, "trainer", key);
        else if (key == "seed") out.seed = as_u64(v, "trainer", key);
        else if (key == "entropy_coef") out.entropy_coef = as_double(v, "trainer", key);
        else if (key == "value_coef") out.value_coef = as_double(v, "trainer", key);
        else if (key == "grad_clip") out.grad_clip = as_double(v, "trainer", key);
        else if (key == "gail_pretrain_epochs")
            out.gail_pretrain_epochs = as_size(v, "trainer", key);
        else bad_key("trainer", key, "unknown key");
    }
}

void parse_network(const nlohmann::json& obj, NetworkConfig& out) {
    for (const auto& [key, v] : obj.items()) {
        if (key == "model_dim") out.model_dim = as_size(v, "network", key);
        else if (key == "heads") out.heads = as_size(v, "network", key);
        else if (key == "attn_layers") out.attn_layers = as_size(v, "network", key);
        else if (key == "head_hidden") out.head_hidden = as_size(v, "network", key);
        else if (key == "max_vehicles") out.max_vehicles = as_size(v, "network", key);
        else bad_key("network", key, "unknown key");
    }
}

void parse_reward(const nlohmann::json& obj, RewardConfig& out) {
    for (const auto& [key, v] : obj.items()) {
        if (key == "theta_w") out.theta_w = as_double(v, "reward", key);
        else if (key == "beta") out.beta = as_double(v, "reward", key);
        else if (key == "w1") out.w1 = as_double(v, "reward", key);
        else if (key == "w2") out.w2 = as_double(v, "reward", key);
        else if (key == "beta0") out.beta0 = as_double(v, "reward", key);
        else if (key == "beta1") out.beta1 = as_double(v, "reward", key);
        else if (key == "svo_mode") {
            std::string mode = as_string(v, "reward", key);
            if (mode == "fixed") out.svo_mode = SvoMode::fixed;
            else if (mode == "adaptive") out.svo_mode = SvoMode::adaptive;
            else bad_key("reward", key, "expected \"fixed\" or \"adaptive\"");
        } else if (key == "svo_angle_deg") out.svo_angle_deg = as_double(v, "reward", key);
        else if (key == "lambda_phi") out.lambda_phi = as_double(v, "reward", key);
        else if (key == "epsilon") out.epsilon = as_double(v, "reward", key);
        else if (key == "v_ref") out.v_ref = as_double(v, "reward", key);
        else if (key == "imitation_weight") out.imitation_weight = as_double(v, "reward", key);
        else bad_key("reward", key, "unknown key");
    }
}

void parse_env(const nlohmann::json& obj, EnvFileConfig& out) {
    for (const auto& [key, v] : obj.items()) {
        if (key == "map") out.map = as_string(v, "env", key);
        else if (key == "default_length") out.default_length = as_double(v, "env", key);
        else if (key == "default_width") out.default_width = as_double(v, "env", key);
        else bad_key("env", key, "unknown key");
    }
}

void parse_miner(const nlohmann::json& obj, MinerConfig& out) {
    for (const auto& [key, v] : obj.items()) {
        if (key == "dt") out.dt = as_double(v, "miner", key);
        else if (key == "window_half_s") out.window_half_s = as_double(v, "miner", key);
        else if (key == "debounce_s") out.debounce_s = as_double(v, "miner", key);
        else if (key == "gap_s") out.gap_s = as_double(v, "miner", key);
        else if (key == "max_speed") out.max_speed = as_double(v, "miner", key);
        else if (key == "max_step_disp") out.max_step_disp = as_double(v, "miner", key);
        else if (key == "source_tag") out.source_tag = as_string(v, "miner", key);
        else bad_key("miner", key, "unknown key");
    }
}

void parse_risk(const nlohmann::json& obj, RiskConfig& out) {
    for (const auto& [key, v] : obj.items()) {
        if (key == "aggregate") {
            std::string agg = as_string(v, "risk", key);
            if (agg == "mean") out.aggregate = RiskAggregate::mean;
            else if (agg == "median") out.aggregate = RiskAggregate::median;
            else bad_key("risk", key, "expected \"mean\" or \"median\"");
        } else if (key == "w_coll") out.weights.w_coll = as_double(v, "risk", key);
        else if (key == "w_jerk") out.weights.w_jerk = as_double(v, "risk", key);
        else if (key == "w_smooth") out.weights.w_smooth = as_double(v, "risk", key);
        else if (key == "q_lo") out.q_lo = as_double(v, "risk", key);
        else if (key == "q_hi") out.q_hi = as_double(v, "risk", key);
        else bad_key("risk", key, "unknown key");
    }
}

void check(bool ok, const std::string& section, const std::string& key,
           const std::string& what) {
    if (!ok) bad_key(section, key, what);
}

void validate_reward_config(const RewardConfig& cfg) {
    check(cfg.theta_w > 0, "reward", "theta_w", "must be positive");
    check(cfg.w1 >= 0 && cfg.w2 >= 0 && cfg.w1 + cfg.w2 > 0, "reward", "w1",
          "w1 and w2 must be non-negative with a positive sum");
    check(cfg.lambda_phi >= 0 && cfg.lambda_phi <= 1, "reward", "lambda_phi",
          "must be in [0, 1]");
    check(cfg.epsilon > 0, "reward", "epsilon", "must be positive");
    check(cfg.v_ref > 0, "reward", "v_ref", "must be positive");
    check(cfg.imitation_weight >= 0 && cfg.imitation_weight <= 1, "reward",
          "imitation_weight", "must be in [0, 1]");
}

void validate_network_config(const NetworkConfig& cfg) {
    NetworkLayout layout;
    layout.model_dim = cfg.model_dim;
    layout.heads = cfg.heads;
    layout.attn_layers = cfg.attn_layers;
    layout.head_hidden = cfg.head_hidden;
    layout.max_vehicles = cfg.max_vehicles;
    try {
        validate_layout(layout);
    } catch (const std::exception& e) {
        throw ConfigError("network", e.what());
    }
}

void validate_env_config(const EnvFileConfig& cfg) {
    check(cfg.default_length > 0, "env", "default_length", "must be positive");
    check(cfg.default_width > 0, "env", "default_width", "must be positive");
}

void validate_miner_config(const MinerConfig& cfg) {
    check(cfg.dt > 0, "miner", "dt", "must be positive");
    check(cfg.window_half_s > 0, "miner", "window_half_s", "must be positive");
    check(cfg.debounce_s >= 0, "miner", "debounce_s", "must be non-negative");
    check(cfg.gap_s > 0, "miner", "gap_s", "must be positive");
    check(cfg.max_speed > 0, "miner", "max_speed", "must be positive");
    check(cfg.max_step_disp > 0, "miner", "max_step_disp", "must be positive");
}

void validate_risk_config(const RiskConfig& cfg) {
    const RiskWeights& w = cfg.weights;
    check(w.w_coll >= 0 && w.w_jerk >= 0 && w.w_smooth >= 0, "risk", "w_coll",
          "weights must be non-negative");
    check(std::abs(w.w_coll + w.w_jerk + w.w_smooth - 1.0) <= 1e-9, "risk", "w_coll",
          "weights must sum to 1");
    check(cfg.q_lo > 0 && cfg.q_lo < cfg.q_hi && cfg.q_hi <= 1, "risk", "q_lo",
          "quantiles must satisfy 0 < q_lo < q_hi <= 1");
}

} // namespace

void validate_trainer_config(const TrainerConfig& cfg) {
    check(cfg.lr_ppo > 0, "trainer", "lr_ppo", "must be positive");
    check(cfg.lr_gail > 0, "trainer", "lr_gail", "must be positive");
    check(cfg.batch_ppo >= 2, "trainer", "batch_ppo", "must be at least 2");
    check(cfg.batch_gail >= 2, "trainer", "batch_gail", "must be at least 2");
    check(cfg.alpha >= 0 && cfg.alpha < 1, "trainer", "alpha", "must be in [0, 1)");
    check(cfg.gamma > 0 && cfg.gamma <= 1, "trainer", "gamma", "must be in (0, 1]");
    check(cfg.eps_clip > 0 && cfg.eps_clip < 1, "trainer", "eps_clip", "must be in (0, 1)");
    check(cfg.gae_lambda >= 0 && cfg.gae_lambda <= 1, "trainer", "gae_lambda",
          "must be in [0, 1]");
    check(cfg.reset_interval >= 1, "trainer", "reset_interval", "must be at least 1");
    check(cfg.reset_layers >= 1, "trainer", "reset_layers", "must be at least 1");
    check(cfg.replay_capacity >= 1, "trainer", "replay_capacity", "must be at least 1");
    check(cfg.workers >= 1, "trainer", "workers", "must be at least 1");
    check(cfg.iterations >= 1, "trainer", "iterations", "must be at least 1");
    check(cfg.epochs >= 1, "trainer", "epochs", "must be at least 1");
    check(cfg.minibatch >= 1, "trainer", "minibatch", "must be at least 1");
    check(cfg.entropy_coef >= 0, "trainer", "entropy_coef", "must be non-negative");
    check(cfg.value_coef >= 0, "trainer", "value_coef", "must be non-negative");
    check(cfg.grad_clip > 0, "trainer", "grad_clip", "must be positive");
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(origin, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin, "top level must be an object");

    RunConfig cfg;
    for (const auto& [key, v] : root.items()) {
        if (!v.is_object()) throw ConfigError(key, "section must be an object");
        if (key == "trainer") parse_trainer(v, cfg.trainer);
        else if (key == "network") parse_network(v, cfg.network);
        else if (key == "reward") parse_reward(v, cfg.reward);
        else if (key == "env") parse_env(v, cfg.env);
        else if (key == "miner") parse_miner(v, cfg.miner);
        else if (key == "risk") parse_risk(v, cfg.risk);
        else throw ConfigError(key, "unknown section");
    }

    validate_trainer_config(cfg.trainer);
    validate_network_config(cfg.network);
    validate_reward_config(cfg.reward);
    validate_env_config(cfg.env);
    validate_miner_config(cfg.miner);
    validate_risk_config(cfg.risk);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path);
}

std::string run_config_json(const RunConfig& cfg) {
    ordered_json j;
    j["trainer"] = {
        {"lr_ppo", cfg.trainer.lr_ppo},
        {"batch_ppo", cfg.trainer.batch_ppo},
        {"lr_gail", cfg.trainer.lr_gail},
        {"batch_gail", cfg.trainer.batch_gail},
        {"alpha", cfg.trainer.alpha},
        {"gamma", cfg.trainer.gamma},
        {"eps_clip", cfg.trainer.eps_clip},
        {"gae_lambda", cfg.trainer.gae_lambda},
        {"reset_interval", cfg.trainer.reset_interval},
        {"reset_layers", cfg.trainer.reset_layers},
        {"replay_capacity", cfg.trainer.replay_capacity},
        {"workers", cfg.trainer.workers},
        {"iterations", cfg.trainer.iterations},
        {"epochs", cfg.trainer.epochs},
        {"minibatch", cfg.trainer.minibatch},
        {"seed", cfg.trainer.seed},
        {"entropy_coef", cfg.trainer.entropy_coef},
        {"value_coef", cfg.trainer.value_coef},
        {"grad_clip", cfg.trainer.grad_clip},
        {"gail_pretrain_epochs", cfg.trainer.gail_pretrain_epochs},
    };
    j["network"] = {
        {"model_dim", cfg.network.model_dim},
        {"heads", cfg.network.heads},
        {"attn_layers", cfg.network.attn_layers},
        {"head_hidden", cfg.network.head_hidden},
        {"max_vehicles", cfg.network.max_vehicles},
    };
    j["reward"] = {
        {"theta_w", cfg.reward.theta_w},
        {"beta", cfg.reward.beta},
        {"w1", cfg.reward.w1},
        {"w2", cfg.reward.w2},
        {"beta0", cfg.reward.beta0},
        {"beta1", cfg.reward.beta1},
        {"svo_mode", cfg.reward.svo_mode == SvoMode::fixed ? "fixed" : "adaptive"},
        {"svo_angle_deg", cfg.reward.svo_angle_deg},
        {"lambda_phi", cfg.reward.lambda_phi},
        {"epsilon", cfg.reward.epsilon},
        {"v_ref", cfg.reward.v_ref},
        {"imitation_weight", cfg.reward.imitation_weight},
    };
    j["env"] = {
        {"map", cfg.env.map},
        {"default_length", cfg.env.default_length},
        {"default_width", cfg.env.default_width},
    };
    j["miner"] = {
        {"dt", cfg.miner.dt},
        {"window_half_s", cfg.miner.window_half_s},
        {"debounce_s", cfg.miner.debounce_s},
        {"gap_s", cfg.miner.gap_s},
        {"max_speed", cfg.miner.max_speed},
        {"max_step_disp", cfg.miner.max_step_disp},
        {"source_tag", cfg.miner.source_tag},
    };
    j["risk"] = {
        {"aggregate", cfg.risk.aggregate == RiskAggregate::median ? "median" : "mean"},
        {"w_coll", cfg.risk.weights.w_coll},
        {"w_jerk", cfg.risk.weights.w_jerk},
        {"w_smooth", cfg.risk.weights.w_smooth},
        {"q_lo", cfg.risk.q_lo},
        {"q_hi", cfg.risk.q_hi},
    };
    return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
    uint64_t h = fnv1a64(run_config_json(cfg));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace scgen
