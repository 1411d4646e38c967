#include "scgen/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "scgen/csv.hpp"
#include "scgen/errors.hpp"
#include "scgen/gail.hpp"
#include "scgen/manifest.hpp"
#include "scgen/num_format.hpp"
#include "scgen/policy_core.hpp"
#include "scgen/reward_engine.hpp"
#include "scgen/risk_metrics.hpp"
#include "scgen/rng.hpp"
#include "scgen/scppo.hpp"
#include "scgen/sim_env.hpp"
#include "scgen/svg.hpp"
#include "scgen/trajectory.hpp"

namespace scgen {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Accepts both this project's round-trip trajectory files and NGSIM-style
// column names.
CsvSchema detect_schema(const std::string& path) {
    CsvReader reader(path);
    if (!reader.is_open()) throw ParseError(path, 0, "cannot open trajectory file");
    auto has = [&](const std::string& name) { return reader.column(name) >= 0; };
    CsvSchema own = round_trip_schema();
    if (has(own.vehicle_id) && has(own.frame) && has(own.x) && has(own.y)) return own;
    CsvSchema ngsim;
    if (has(ngsim.vehicle_id) && has(ngsim.frame) && has(ngsim.x) && has(ngsim.y)) return ngsim;
    throw ParseError(path, 1, "unrecognized trajectory header; expected vehicle_id/time/x/y or "
                              "Vehicle_ID/Frame_ID/Local_X/Local_Y columns");
}

EnvConfig env_config_from(const RunConfig& cfg, const LaneMap* map) {
    EnvConfig env_cfg;
    env_cfg.max_vehicles = cfg.network.max_vehicles;
    env_cfg.default_length = cfg.env.default_length;
    env_cfg.default_width = cfg.env.default_width;
    env_cfg.map = map;
    return env_cfg;
}

ManifestInfo base_manifest(const char* tool, const CliOptions& opts) {
    ManifestInfo info;
    info.tool = tool;
    info.config_hash = config_hash(opts.config);
    info.seed = opts.config.trainer.seed;
    info.deterministic = opts.deterministic;
    if (!opts.config_path.empty()) info.inputs.push_back({"config", opts.config_path});
    return info;
}

void check_layouts(const Checkpoint& cp, const NetworkConfig& nc) {
    bool ok = cp.policy.layout() == policy_layout(nc.model_dim, nc.heads, nc.attn_layers,
                                                  nc.head_hidden, nc.max_vehicles) &&
              cp.value.layout() == value_layout(nc.model_dim, nc.heads, nc.attn_layers,
                                                nc.head_hidden, nc.max_vehicles) &&
              cp.disc.layout() == disc_layout(nc.model_dim, nc.heads, nc.attn_layers,
                                              nc.head_hidden, nc.max_vehicles);
    if (!ok)
        throw ArtifactError("checkpoint network layout does not match the configured network");
}

// One policy-driven rollout of a catalog scenario, with full reward
// bookkeeping. The episode-level naturalness term is filled in after the
// rollout (it needs the whole action batch); episodes with fewer than two
// steps report it as zero.
struct EpisodeRun {
    std::string scenario_id;
    Role adv_role = Role::lf;
    double dt = 0.1;
    std::vector<TraceRow> rows;
    std::vector<RewardBreakdown> breakdowns; // index = step - 1
    std::vector<double> adv_y;
    bool collided = false;
    double reward_sum = 0.0;
};

EpisodeRun run_episode(const Scenario& s, const Checkpoint& cp, const RewardConfig& rcfg,
                       const EnvConfig& env_cfg, Rng& rng) {
    SimEnv env(s, env_cfg);
    const EnvState& start = env.reset();

    EpisodeRun run;
    run.scenario_id = s.scenario_id;
    run.adv_role = env.adversary_role();
    run.dt = s.dt;
    append_trace_rows(run.rows, start, CollisionReport{});
    run.adv_y.push_back(start.adversary.y);

    SVOConfig svo_cfg = rcfg.svo();
    std::optional<double> phi_prev;
    std::vector<std::vector<double>> action_rows;
    std::vector<double> zv(2);

    while (!env.state().terminal) {
        FeatureMatrix fm = env.features();
        ActionDistribution dist = forward_policy(cp.policy, fm);
        for (size_t d = 0; d < 2; ++d)
            zv[d] = dist.mean[d] + std::exp(dist.log_std[d]) * rng.normal();
        Action a = squash_action(zv);
        StepResult res = env.step(a);
        const EnvState& st = env.state();

        RewardBreakdown parts;
        SocialUtility su = social_utility(env.features(), svo_cfg);
        double ue = u_ego(st, rcfg.v_ref);
        SvoResult sr = svo_reward(ue, su.u_sv, svo_cfg, phi_prev);
        phi_prev = sr.phi_t;
        parts.r_svo = sr.r_svo;
        parts.u_ego = ue;
        parts.u_sv = su.u_sv;
        parts.phi_t = sr.phi_t;
        parts.r_dist = distance_reward(st);
        parts.r_coll = collision_reward(res.collision);
        run.breakdowns.push_back(parts);

        append_trace_rows(run.rows, st, res.collision);
        run.adv_y.push_back(st.adversary.y);
        action_rows.push_back({a.accel, a.steer});
        if (res.collision.adv_hit_ego) run.collided = true;
    }

    double w = 0.0, r_nat = 0.0;
    if (action_rows.size() >= 2) {
        w = w_distance(compute_batch_stats(action_rows), cp.expert_stats);
        r_nat = natural_reward(w, rcfg.theta_w);
    }
    for (RewardBreakdown& b : run.breakdowns) {
        b.r_natural = r_nat;
        b.w = w;
        b = total_reward(b, rcfg.beta, rcfg.w1, rcfg.w2);
        run.reward_sum += b.total;
    }
    return run;
}

std::string trace_csv_text(const EpisodeRun& run) {
    std::ostringstream out;
    out << "step,time,vehicle_id,x,y,speed,heading,adv_hit_ego,adv_hit_background,"
           "r_natural,r_svo,r_dist,r_coll,r_adv,total,adv_score,u_ego,u_sv,phi_t,w\n";
    for (const TraceRow& r : run.rows) {
        RewardBreakdown b;
        if (r.step >= 1 && r.step <= run.breakdowns.size()) b = run.breakdowns[r.step - 1];
        out << r.step << ',' << fmt_double(static_cast<double>(r.step) * run.dt) << ','
            << r.vehicle_id << ',' << fmt_double(r.x) << ',' << fmt_double(r.y) << ','
            << fmt_double(r.speed) << ',' << fmt_double(r.heading) << ','
            << (r.adv_hit_ego ? 1 : 0) << ',' << (r.adv_hit_background ? 1 : 0) << ','
            << fmt_double(b.r_natural) << ',' << fmt_double(b.r_svo) << ','
            << fmt_double(b.r_dist) << ',' << fmt_double(b.r_coll) << ',' << fmt_double(b.r_adv)
            << ',' << fmt_double(b.total) << ',' << fmt_double(b.adv_score) << ','
            << fmt_double(b.u_ego) << ',' << fmt_double(b.u_sv) << ',' << fmt_double(b.phi_t)
            << ',' << fmt_double(b.w) << '\n';
    }
    return out.str();
}

std::string path_class(const std::string& vehicle_id) {
    if (vehicle_id.rfind("ego:", 0) == 0) return "ego";
    if (vehicle_id.rfind("adv:", 0) == 0) return "adversary";
    return "background";
}

std::vector<PlanPath> trace_paths(const std::vector<TraceRow>& rows) {
    std::vector<PlanPath> paths;
    for (const TraceRow& r : rows) {
        PlanPath* path = nullptr;
        for (PlanPath& p : paths)
            if (p.label == r.vehicle_id) path = &p;
        if (path == nullptr) {
            paths.push_back(PlanPath{r.vehicle_id, path_class(r.vehicle_id), {}});
            path = &paths.back();
        }
        path->points.push_back({r.x, r.y});
    }
    return paths;
}

std::string episode_name(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "episode_%03zu", i);
    return buf;
}

void save_thresholds(const std::string& path, const RiskThresholds& th, size_t samples) {
    ordered_json j;
    j["format_version"] = 1;
    j["tau_a_lo"] = th.tau_a_lo;
    j["tau_a_hi"] = th.tau_a_hi;
    j["tau_t_lo"] = th.tau_t_lo;
    j["tau_t_hi"] = th.tau_t_hi;
    j["q_lo"] = th.q_lo;
    j["q_hi"] = th.q_hi;
    j["samples"] = samples;
    write_text_atomic(path, j.dump(2) + "\n");
}

RiskThresholds load_thresholds(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot open thresholds file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError("thresholds file " + path + " is not valid JSON: " + e.what());
    }
    RiskThresholds th;
    try {
        th.tau_a_lo = j.at("tau_a_lo").get<double>();
        th.tau_a_hi = j.at("tau_a_hi").get<double>();
        th.tau_t_lo = j.at("tau_t_lo").get<double>();
        th.tau_t_hi = j.at("tau_t_hi").get<double>();
        if (j.contains("q_lo")) th.q_lo = j.at("q_lo").get<double>();
        if (j.contains("q_hi")) th.q_hi = j.at("q_hi").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError("thresholds file " + path + " is malformed: " + e.what());
    }
    if (!(th.tau_a_lo < th.tau_a_hi) || !(th.tau_t_lo < th.tau_t_hi))
        throw ArtifactError("thresholds file " + path + " has degenerate bounds");
    return th;
}

// Expert thresholds straight from a catalog: per-scenario lateral jerk and
// smoothness of the default adversary, quantiled.
RiskThresholds thresholds_from_catalog(const std::vector<Scenario>& catalog,
                                       const RiskConfig& risk) {
    std::vector<double> jerks, smooths;
    for (const Scenario& s : catalog) {
        Role role = choose_adversary_role(s);
        const Trajectory& adv = s.neighbors.at(role);
        std::vector<double> ys;
        ys.reserve(adv.samples.size());
        for (const TrajectorySample& ts : adv.samples) ys.push_back(ts.y);
        if (ys.size() >= 4) jerks.push_back(lateral_jerk(ys, s.dt));
        if (ys.size() >= 3) smooths.push_back(traj_smoothness(ys));
    }
    return calibrate_thresholds(jerks, smooths, risk.q_lo, risk.q_hi);
}

const std::string& field(const std::vector<std::string>& fields, int idx,
                         const std::string& path, size_t line) {
    if (idx < 0 || static_cast<size_t>(idx) >= fields.size())
        throw ParseError(path, line, "row has too few fields");
    return fields[static_cast<size_t>(idx)];
}

EpisodeRisk risk_from_trace(const std::string& path) {
    CsvReader reader(path);
    if (!reader.is_open()) throw ParseError(path, 0, "cannot open trace file");
    int c_time = reader.column("time");
    int c_vid = reader.column("vehicle_id");
    int c_y = reader.column("y");
    int c_hit = reader.column("adv_hit_ego");
    if (c_time < 0 || c_vid < 0 || c_y < 0 || c_hit < 0)
        throw ParseError(path, 1, "trace header lacks time/vehicle_id/y/adv_hit_ego columns");

    std::vector<double> times, ys;
    bool collided = false;
    std::vector<std::string> f;
    while (reader.next(f)) {
        size_t line = reader.line_number();
        if (field(f, c_hit, path, line) == "1") collided = true;
        if (path_class(field(f, c_vid, path, line)) != "adversary") continue;
        times.push_back(parse_double_field(field(f, c_time, path, line), path, line, "time"));
        ys.push_back(parse_double_field(field(f, c_y, path, line), path, line, "y"));
    }
    if (ys.size() < 2) throw ParseError(path, 0, "trace has no adversary rows");
    double dt = times[1] - times[0];
    if (dt <= 0) throw ParseError(path, 0, "trace timestamps are not increasing");

    EpisodeRisk er;
    er.episode_id = fs::path(path).stem().string();
    if (ys.size() >= 4) er.jerk = lateral_jerk(ys, dt);
    if (ys.size() >= 3) er.smoothness = traj_smoothness(ys);
    er.collided = collided;
    return er;
}

double parse_angle(const std::string& text) {
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v))
        throw ConfigError("svo-angle", "expected degrees, \"none\", or \"sweep\"");
    return v;
}

} // namespace

void cmd_mine(const MineArgs& args, const CliOptions& opts) {
    LaneMap map = args.map.empty() ? make_parallel_lane_map(3) : load_lane_map(args.map);
    CsvSchema schema = detect_schema(args.trajectories);
    std::vector<Trajectory> corpus = load_trajectories(args.trajectories, schema);
    if (corpus.empty())
        throw ParseError(args.trajectories, 0, "corpus contains no usable trajectories");

    MiningResult res = mine_corpus(corpus, map, opts.config.miner);

    fs::create_directories(opts.out_dir);
    std::string catalog_path = (fs::path(opts.out_dir) / "catalog.jsonl").string();
    std::string stats_path = (fs::path(opts.out_dir) / "mining_stats.json").string();
    write_catalog(catalog_path, res.catalog);
    write_text_atomic(stats_path, mining_stats_json(res.stats));

    ManifestInfo info = base_manifest("mine", opts);
    info.inputs.push_back({"trajectories", args.trajectories});
    if (!args.map.empty()) info.inputs.push_back({"map", args.map});
    info.outputs = {{"catalog", catalog_path}, {"stats", stats_path}};
    info.extra = ordered_json{{"candidates", res.stats.candidates},
                              {"accepted", res.stats.accepted},
                              {"conversion_rate", res.stats.conversion_rate()}};
    write_manifest((fs::path(opts.out_dir) / "mine_manifest.json").string(), info);

    std::cout << mining_stats_table(res.stats);
    std::cout << "catalog: " << catalog_path << " (" << res.catalog.size() << " scenarios)\n";
}

void cmd_calibrate(const CalibrateArgs& args, const CliOptions& opts) {
    std::vector<Scenario> catalog = read_catalog(args.catalog);
    if (catalog.empty()) throw ValidationError("catalog " + args.catalog + " is empty");
    RiskThresholds th = thresholds_from_catalog(catalog, opts.config.risk);

    fs::create_directories(opts.out_dir);
    std::string out_path = (fs::path(opts.out_dir) / "thresholds.json").string();
    save_thresholds(out_path, th, catalog.size());

    ManifestInfo info = base_manifest("calibrate", opts);
    info.inputs.push_back({"catalog", args.catalog});
    info.outputs = {{"thresholds", out_path}};
    info.extra = ordered_json{{"samples", catalog.size()}};
    write_manifest((fs::path(opts.out_dir) / "calibrate_manifest.json").string(), info);

    std::cout << "thresholds: jerk [" << fmt_double(th.tau_a_lo) << ", " << fmt_double(th.tau_a_hi)
              << "] m/s^3, smoothness [" << fmt_double(th.tau_t_lo) << ", "
              << fmt_double(th.tau_t_hi) << "] m (" << catalog.size() << " scenarios)\n";
    std::cout << "wrote " << out_path << "\n";
}

void cmd_train(const TrainArgs& args, const CliOptions& opts) {
    std::vector<Scenario> catalog = read_catalog(args.catalog);
    LaneMap map;
    const LaneMap* map_ptr = nullptr;
    if (!opts.config.env.map.empty()) {
        map = load_lane_map(opts.config.env.map);
        map_ptr = &map;
    }

    TrainResult res = train(opts.config, catalog, map_ptr, opts.out_dir);

    ManifestInfo info = base_manifest("train", opts);
    info.inputs.push_back({"catalog", args.catalog});
    if (!opts.config.env.map.empty()) info.inputs.push_back({"map", opts.config.env.map});
    info.outputs = {{"checkpoint", res.checkpoint_path}, {"metrics", res.metrics_path}};
    const IterationMetrics& last = res.history.back();
    info.extra = ordered_json{{"iterations", res.history.size()},
                              {"final_mean_reward", last.mean_reward},
                              {"final_mean_adv_reward", last.mean_adv_reward},
                              {"final_w_distance", last.w_distance},
                              {"final_collision_rate", last.collision_rate}};
    write_manifest((fs::path(opts.out_dir) / "train_manifest.json").string(), info);

    std::cout << "trained " << res.history.size() << " iterations; final mean_reward="
              << fmt_double(last.mean_reward) << " w_distance=" << fmt_double(last.w_distance)
              << " collision_rate=" << fmt_double(last.collision_rate) << "\n";
    std::cout << "checkpoint: " << res.checkpoint_path << "\n";
}

void cmd_generate(const GenerateArgs& args, const CliOptions& opts) {
    if (args.episodes == 0) throw ConfigError("episodes", "must be at least 1");
    Checkpoint cp = load_checkpoint(args.checkpoint);
    check_layouts(cp, opts.config.network);
    std::vector<Scenario> catalog = read_catalog(args.catalog);
    if (catalog.empty()) throw ValidationError("catalog " + args.catalog + " is empty");

    LaneMap map;
    const LaneMap* map_ptr = nullptr;
    if (!opts.config.env.map.empty()) {
        map = load_lane_map(opts.config.env.map);
        map_ptr = &map;
    }
    EnvConfig env_cfg = env_config_from(opts.config, map_ptr);

    fs::create_directories(opts.out_dir);
    ManifestInfo info = base_manifest("generate", opts);
    info.inputs.push_back({"checkpoint", args.checkpoint});
    info.inputs.push_back({"catalog", args.catalog});

    size_t collisions = 0;
    for (size_t i = 0; i < args.episodes; ++i) {
        const Scenario& s = catalog[i % catalog.size()];
        Rng rng(opts.config.trainer.seed ^ fnv1a64("episode-" + std::to_string(i)));
        EpisodeRun run = run_episode(s, cp, opts.config.reward, env_cfg, rng);
        if (run.collided) ++collisions;

        std::string name = episode_name(i);
        std::string csv_path = (fs::path(opts.out_dir) / (name + ".csv")).string();
        std::string svg_path = (fs::path(opts.out_dir) / (name + ".svg")).string();
        write_text_atomic(csv_path, trace_csv_text(run));
        write_text_atomic(svg_path, plan_view_svg(trace_paths(run.rows), map_ptr));
        info.outputs.push_back({name + "_trace", csv_path});
        info.outputs.push_back({name + "_plot", svg_path});
    }

    info.extra = ordered_json{{"episodes", args.episodes}, {"adversary_collisions", collisions}};
    write_manifest((fs::path(opts.out_dir) / "generate_manifest.json").string(), info);
    std::cout << "wrote " << args.episodes << " episodes to " << opts.out_dir << " ("
              << collisions << " adversary collisions)\n";
}

void cmd_evaluate(const EvaluateArgs& args, const CliOptions& opts) {
    const RunConfig& cfg = opts.config;
    bool trace_mode = !args.traces_dir.empty();
    bool live_mode = !args.checkpoint.empty();
    if (trace_mode && live_mode)
        throw ConfigError("traces", "pass either --traces or --checkpoint, not both");
    if (!trace_mode && !live_mode)
        throw ConfigError("traces", "pass --traces DIR, or --checkpoint FILE with --catalog");
    if (live_mode && args.catalog.empty())
        throw ConfigError("catalog", "live evaluation needs --catalog");

    std::vector<Scenario> catalog;
    if (!args.catalog.empty()) {
        catalog = read_catalog(args.catalog);
        if (catalog.empty()) throw ValidationError("catalog " + args.catalog + " is empty");
    }

    RiskThresholds th;
    if (!args.thresholds.empty()) {
        th = load_thresholds(args.thresholds);
    } else if (!catalog.empty()) {
        th = thresholds_from_catalog(catalog, cfg.risk);
    } else {
        throw ConfigError("thresholds",
                          "provide --thresholds FILE or --catalog FILE to calibrate from");
    }

    fs::create_directories(opts.out_dir);
    ManifestInfo info = base_manifest("evaluate", opts);
    if (!args.thresholds.empty()) info.inputs.push_back({"thresholds", args.thresholds});
    if (!args.catalog.empty()) info.inputs.push_back({"catalog", args.catalog});

    RiskReport report;
    std::vector<std::pair<std::string, RiskReport>> sweep;

    if (trace_mode) {
        if (!args.svo_angle.empty())
            throw ConfigError("svo-angle", "angle overrides need live evaluation "
                                           "(--checkpoint and --catalog)");
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(args.traces_dir)) {
            if (!entry.is_regular_file()) continue;
            std::string name = entry.path().filename().string();
            if (name.rfind("episode_", 0) == 0 && entry.path().extension() == ".csv")
                files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw ValidationError("no episode_*.csv traces under " + args.traces_dir);
        std::vector<EpisodeRisk> episodes;
        for (const std::string& file : files) episodes.push_back(risk_from_trace(file));
        report = dangerousness(episodes, th, cfg.risk.weights, cfg.risk.aggregate);
        info.inputs.push_back({"traces", args.traces_dir});
    } else {
        Checkpoint cp = load_checkpoint(args.checkpoint);
        check_layouts(cp, cfg.network);
        info.inputs.push_back({"checkpoint", args.checkpoint});

        LaneMap map;
        const LaneMap* map_ptr = nullptr;
        if (!cfg.env.map.empty()) {
            map = load_lane_map(cfg.env.map);
            map_ptr = &map;
        }
        EnvConfig env_cfg = env_config_from(cfg, map_ptr);

        auto run_batch = [&](const RewardConfig& rc, const std::string& salt) {
            std::vector<EpisodeRisk> episodes;
            for (size_t i = 0; i < args.episodes; ++i) {
                const Scenario& s = catalog[i % catalog.size()];
                Rng rng(cfg.trainer.seed ^ fnv1a64(salt + "-" + std::to_string(i)));
                EpisodeRun run = run_episode(s, cp, rc, env_cfg, rng);
                EpisodeRisk er;
                er.episode_id = salt + "_" + episode_name(i);
                if (run.adv_y.size() >= 4) er.jerk = lateral_jerk(run.adv_y, run.dt);
                if (run.adv_y.size() >= 3) er.smoothness = traj_smoothness(run.adv_y);
                er.collided = run.collided;
                episodes.push_back(std::move(er));
            }
            return episodes;
        };

        if (args.svo_angle == "sweep") {
            const std::array<std::pair<const char*, std::optional<double>>, 5> angles = {
                {{"-45", -45.0}, {"-15", -15.0}, {"15", 15.0}, {"45", 45.0}, {"none", {}}}};
            for (const auto& [label, angle] : angles) {
                RewardConfig rc = cfg.reward;
                if (angle.has_value()) {
                    rc.svo_mode = SvoMode::fixed;
                    rc.svo_angle_deg = *angle;
                } else {
                    rc.svo_mode = SvoMode::adaptive;
                }
                std::vector<EpisodeRisk> episodes = run_batch(rc, std::string("svo") + label);
                sweep.emplace_back(label,
                                   dangerousness(episodes, th, cfg.risk.weights,
                                                 cfg.risk.aggregate));
            }
            report = sweep.back().second; // the adaptive ("none") run
        } else {
            RewardConfig rc = cfg.reward;
            if (args.svo_angle == "none") {
                rc.svo_mode = SvoMode::adaptive;
            } else if (!args.svo_angle.empty()) {
                rc.svo_mode = SvoMode::fixed;
                rc.svo_angle_deg = parse_angle(args.svo_angle);
            }
            std::vector<EpisodeRisk> episodes = run_batch(rc, "eval");
            report = dangerousness(episodes, th, cfg.risk.weights, cfg.risk.aggregate);
        }
    }

    std::string json_path = (fs::path(opts.out_dir) / "risk_report.json").string();
    std::string csv_path = (fs::path(opts.out_dir) / "risk_report.csv").string();
    write_risk_report(json_path, csv_path, report);
    info.outputs = {{"report_json", json_path}, {"report_csv", csv_path}};

    if (!sweep.empty()) {
        std::ostringstream table;
        table << "angle_deg,d_risk,collision_rate,psi_jerk,psi_smoothness\n";
        for (const auto& [label, r] : sweep)
            table << label << ',' << fmt_double(r.d_risk) << ',' << fmt_double(r.c_coll) << ','
                  << fmt_double(r.psi_jerk) << ',' << fmt_double(r.psi_smoothness) << '\n';
        std::string sweep_path = (fs::path(opts.out_dir) / "svo_sweep.csv").string();
        write_text_atomic(sweep_path, table.str());
        info.outputs.push_back({"svo_sweep", sweep_path});
        std::cout << table.str();
    }

    info.extra = ordered_json{{"d_risk", report.d_risk},
                              {"collision_rate", report.c_coll},
                              {"episodes", report.episodes.size()}};
    write_manifest((fs::path(opts.out_dir) / "evaluate_manifest.json").string(), info);
    std::cout << "d_risk=" << fmt_double(report.d_risk) << " collision_rate="
              << fmt_double(report.c_coll) << " over " << report.episodes.size()
              << " episodes\n";
    std::cout << "report: " << json_path << "\n";
}

void cmd_plot(const PlotArgs& args, const CliOptions& opts) {
    LaneMap map;
    const LaneMap* map_ptr = nullptr;
    if (!args.map.empty()) {
        map = load_lane_map(args.map);
        map_ptr = &map;
    }

    fs::path input(args.input);
    std::string svg;
    std::string kind;
    if (input.extension() == ".jsonl") {
        std::vector<Scenario> catalog = read_catalog(args.input);
        if (catalog.empty()) throw ValidationError("catalog " + args.input + " is empty");
        if (args.index >= catalog.size())
            throw ConfigError("index", "scenario index out of range (catalog has " +
                                           std::to_string(catalog.size()) + " entries)");
        svg = plan_view_svg(scenario_paths(catalog[args.index]), map_ptr);
        kind = "scenario";
    } else {
        CsvReader reader(args.input);
        if (!reader.is_open()) throw ParseError(args.input, 0, "cannot open input");
        const std::vector<std::string>& header = reader.header();
        if (!header.empty() && header[0] == "iteration") {
            int c_it = reader.column("iteration");
            int c_reward = reader.column("mean_reward");
            int c_adv = reader.column("mean_adv_reward");
            int c_w = reader.column("w_distance");
            int c_coll = reader.column("collision_rate");
            if (c_reward < 0 || c_adv < 0 || c_w < 0 || c_coll < 0)
                throw ParseError(args.input, 1, "metrics header lacks required columns");
            std::vector<IterationMetrics> history;
            std::vector<std::string> f;
            while (reader.next(f)) {
                size_t line = reader.line_number();
                IterationMetrics m;
                m.iteration = static_cast<size_t>(
                    parse_double_field(field(f, c_it, args.input, line), args.input, line,
                                       "iteration"));
                m.mean_reward = parse_double_field(field(f, c_reward, args.input, line),
                                                   args.input, line, "mean_reward");
                m.mean_adv_reward = parse_double_field(field(f, c_adv, args.input, line),
                                                       args.input, line, "mean_adv_reward");
                m.w_distance = parse_double_field(field(f, c_w, args.input, line), args.input,
                                                  line, "w_distance");
                m.collision_rate = parse_double_field(field(f, c_coll, args.input, line),
                                                      args.input, line, "collision_rate");
                history.push_back(m);
            }
            if (history.empty()) throw ParseError(args.input, 0, "metrics file has no data rows");
            svg = metrics_svg(history);
            kind = "metrics";
        } else if (!header.empty() && header[0] == "step") {
            int c_vid = reader.column("vehicle_id");
            int c_x = reader.column("x");
            int c_y = reader.column("y");
            if (c_vid < 0 || c_x < 0 || c_y < 0)
                throw ParseError(args.input, 1, "trace header lacks vehicle_id/x/y columns");
            std::vector<TraceRow> rows;
            std::vector<std::string> f;
            while (reader.next(f)) {
                size_t line = reader.line_number();
                TraceRow r;
                r.vehicle_id = field(f, c_vid, args.input, line);
                r.x = parse_double_field(field(f, c_x, args.input, line), args.input, line, "x");
                r.y = parse_double_field(field(f, c_y, args.input, line), args.input, line, "y");
                rows.push_back(std::move(r));
            }
            if (rows.empty()) throw ParseError(args.input, 0, "trace file has no data rows");
            svg = plan_view_svg(trace_paths(rows), map_ptr);
            kind = "trace";
        } else {
            throw ParseError(args.input, 1, "unrecognized input; expected a catalog .jsonl, a "
                                            "metrics CSV, or an episode trace CSV");
        }
    }

    fs::create_directories(opts.out_dir);
    std::string out_path = (fs::path(opts.out_dir) / (input.stem().string() + ".svg")).string();
    write_text_atomic(out_path, svg);

    ManifestInfo info = base_manifest("plot", opts);
    info.inputs.push_back({"input", args.input});
    if (!args.map.empty()) info.inputs.push_back({"map", args.map});
    info.outputs = {{"svg", out_path}};
    info.extra = ordered_json{{"kind", kind}};
    write_manifest((fs::path(opts.out_dir) / "plot_manifest.json").string(), info);
    std::cout << "plot: " << out_path << "\n";
}

} // namespace scgen
