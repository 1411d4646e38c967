#pragma once

#include <cstdint>
#include <string>

#include "scgen/reward_engine.hpp"
#include "scgen/risk_metrics.hpp"
#include "scgen/scenario.hpp"

namespace scgen {

struct TrainerConfig {
    double lr_ppo = 0.0002;
    size_t batch_ppo = 2048;
    double lr_gail = 0.0003;
    size_t batch_gail = 4096;
    double alpha = 0.01; // leaky clip slope
    double gamma = 0.99;
    double eps_clip = 0.2;
    double gae_lambda = 0.95;
    size_t reset_interval = 1000;
    size_t reset_layers = 3;
    size_t replay_capacity = 100000;
    size_t workers = 2;
    size_t iterations = 200;
    size_t epochs = 4; // optimization epochs per batch
    size_t minibatch = 256;
    uint64_t seed = 0;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double grad_clip = 0.5;
    size_t gail_pretrain_epochs = 5;
};

void validate_trainer_config(const TrainerConfig& cfg);

struct NetworkConfig {
    size_t model_dim = 32;
    size_t heads = 2;
    size_t attn_layers = 2;
    size_t head_hidden = 64;
    size_t max_vehicles = 8;
};

struct EnvFileConfig {
    std::string map;             // lane-map JSON path, may be empty
    double default_length = 5.0; // vehicle footprint fallbacks
    double default_width = 2.0;
};

struct RiskConfig {
    RiskAggregate aggregate = RiskAggregate::mean;
    RiskWeights weights;
    double q_lo = 0.75;
    double q_hi = 0.95;
};

struct RunConfig {
    TrainerConfig trainer;
    NetworkConfig network;
    RewardConfig reward;
    EnvFileConfig env;
    MinerConfig miner;
    RiskConfig risk;
};

// Strict parse: unknown sections or keys are rejected by name, values
// type-checked, then cross-field constraints validated. Throws ConfigError.
RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Canonical JSON of the resolved config (every field explicit, fixed order).
std::string run_config_json(const RunConfig& cfg);
// FNV-1a hash of the canonical JSON, as 16 hex characters.
std::string config_hash(const RunConfig& cfg);

} // namespace scgen
