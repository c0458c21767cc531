#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "pessimlab/planner.hpp"
#include "pessimlab/policy.hpp"
#include "pessimlab/serde.hpp"

namespace fs = std::filesystem;
using namespace pessimlab;

namespace {

struct CliArgs {
    std::string config_file;
    std::string out_dir;
    std::uint64_t seed = 0;
    int workers = 0;
};

json load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config: " + file);
    json cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded()) throw ValidationError("malformed JSON in config: " + file);
    return cfg;
}

void write_manifest(const CliArgs& args, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs) {
    json manifest{{"format", "pessimlab-manifest-v1"},
                  {"command", command},
                  {"seed", args.seed},
                  {"config", config},
                  {"outputs", outputs}};
    std::ofstream out(fs::path(args.out_dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + args.out_dir);
    out << manifest.dump(2) << "\n";
}

std::string out_path(const CliArgs& args, const std::string& name) {
    return (fs::path(args.out_dir) / name).string();
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"env_id", "tiers", "size", "reference_episodes"}, "gen-data config");
    const std::string env_id = cfg.at("env_id").get<std::string>();
    const auto tiers = cfg.at("tiers").get<std::vector<std::string>>();
    const std::size_t size = cfg.at("size").get<std::size_t>();
    const int ref_episodes = cfg.value("reference_episodes", 3);

    auto env = make_env(env_id);
    calibrate_reference_returns(*env, mix_seed(args.seed, 0x5eed), ref_episodes);

    std::vector<std::string> outputs;
    for (const std::string& tier : tiers) {
        const Dataset ds =
            generate_dataset(*env, tier, size, mix_seed(args.seed, std::hash<std::string>{}(tier)));
        const std::string base = env_id + "_" + tier;
        dataset_write(ds, out_path(args, base));
        outputs.push_back(base + ".csv");
        outputs.push_back(base + ".meta.json");
    }
    write_manifest(args, "gen-data", cfg, outputs);
    return 0;
}

int cmd_train_dynamics(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"dataset", "model"}, "train-dynamics config");
    const Dataset ds = dataset_read(cfg.at("dataset").get<std::string>());
    const ModelConfig mc = model_config_from_json(cfg.value("model", json::object()), args.seed);
    const EnsembleModel model = train_ensemble(ds, mc, args.workers);
    save_model(model, out_path(args, "model.ckpt"));
    write_manifest(args, "train-dynamics", cfg, {"model.ckpt"});
    return 0;
}

PMDPConfig parse_pmdp(const json& j, std::uint64_t seed, std::size_t d_s) {
    require_keys(j,
                 {"penalty", "lambda", "horizon", "gamma", "rollouts_per_batch", "batches", "state_clip",
                  "dims", "use_all_members", "aleatoric_use_std"},
                 "pmdp config");
    PMDPConfig cfg;
    cfg.penalty_kind = penalty_kind_from_name(j.value("penalty", "ensemble_std"));
    if (j.contains("lambda")) {
        const json& lm = j["lambda"];
        require_keys(lm, {"mode", "value", "constraint", "step", "init"}, "lambda config");
        const std::string mode = lm.value("mode", "fixed");
        if (mode == "fixed")
            cfg.lambda_mode = LambdaMode::fixed(lm.value("value", 1.0));
        else if (mode == "auto")
            cfg.lambda_mode = LambdaMode::automatic_mode(lm.value("constraint", 1.0),
                                                         lm.value("step", 0.05), lm.value("init", 1.0));
        else
            throw ValidationError("lambda mode must be 'fixed' or 'auto'");
    }
    cfg.horizon = j.value("horizon", 5);
    cfg.gamma = j.value("gamma", 0.99);
    cfg.rollouts_per_batch = j.value("rollouts_per_batch", 32);
    if (j.contains("state_clip")) {
        const auto clip_range = j["state_clip"].get<Vec>();
        if (clip_range.size() != 2 || clip_range[0] >= clip_range[1])
            throw ValidationError("state_clip must be [lo, hi]");
        cfg.state_clip.assign(d_s, {clip_range[0], clip_range[1]});
    }
    if (j.value("dims", "state_and_reward") == "state_only")
        cfg.penalty_ctx.dims_used = PenaltyDims::StateOnly;
    cfg.penalty_ctx.use_all_members = j.value("use_all_members", true);
    cfg.penalty_ctx.aleatoric_use_std = j.value("aleatoric_use_std", false);
    cfg.seed = mix_seed(seed, 0xadd);
    cfg.validate();
    return cfg;
}

CemConfig parse_cem(const json& j, std::uint64_t seed) {
    require_keys(j, {"plan_horizon", "population", "elite_frac", "iterations", "init_std", "action_noise"},
                 "cem config");
    CemConfig cfg;
    cfg.plan_horizon = j.value("plan_horizon", 10);
    cfg.population = j.value("population", 32);
    cfg.elite_frac = j.value("elite_frac", 0.25);
    cfg.iterations = j.value("iterations", 4);
    cfg.init_std = j.value("init_std", 0.5);
    cfg.action_noise = j.value("action_noise", 0.0);
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

// Oracle-backed records for the replay-exactness path: the "model" is the
// true environment itself, so penalties are identically zero.
std::vector<RolloutRecord> oracle_rollouts(const OracleEnv& env, RolloutPolicy& policy, const Dataset& ds,
                                           int count, int horizon, Rng& rng) {
    std::vector<RolloutRecord> records(count);
    for (auto& rec : records) {
        rec.start_index = rng.index(ds.size());
        policy.reset(rng.next());
        Vec state = ds.transitions[rec.start_index].state;
        for (int t = 0; t < horizon; ++t) {
            const Vec action = policy.act(state);
            const StepResult sr = env.step_from(state, action);
            rec.states.push_back(state);
            rec.actions.push_back(action);
            rec.next_states.push_back(sr.next_state);
            rec.model_rewards.push_back(sr.reward);
            rec.penalties.push_back(0.0);
            rec.penalized_rewards.push_back(sr.reward);
            rec.member_indices.push_back(0);
            state = sr.next_state;
        }
        for (PenaltyKind k : kAllPenaltyKinds)
            rec.penalty_traces[k].assign(static_cast<std::size_t>(horizon), 0.0);
    }
    return records;
}

int cmd_run_pmdp(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"env_id", "dataset", "model", "pmdp", "policy"}, "run-pmdp config");
    const std::string env_id = cfg.at("env_id").get<std::string>();
    auto env = make_env(env_id);
    const Dataset ds = dataset_read(cfg.at("dataset").get<std::string>());
    const std::string model_path = cfg.at("model").get<std::string>();
    const json policy_cfg = cfg.value("policy", json{{"type", "random"}});
    require_keys(policy_cfg, {"type", "k", "top", "eval_starts", "eval_horizon", "cem"}, "policy config");
    const std::string policy_type = policy_cfg.value("type", "random");
    const PMDPConfig pmdp = parse_pmdp(cfg.value("pmdp", json::object()), args.seed, ds.state_dim());
    const int batches = cfg.value("pmdp", json::object()).value("batches", 1);

    RolloutFile file;
    file.env_id = env_id;
    file.d_s = ds.state_dim();
    file.d_a = ds.action_dim();
    file.penalty_kind = pmdp.penalty_kind;

    Rng rng(mix_seed(args.seed, 0x9011));
    if (model_path == "oracle") {
        UniformRandomPolicy random_policy(env->spec().action_bounds);
        if (policy_type == "cem") {
            CemConfig cem = parse_cem(policy_cfg.value("cem", json::object()), mix_seed(args.seed, 1));
            CemPolicy cem_policy(PlanDynamics::oracle(*env), cem, mix_seed(args.seed, 2));
            file.records = oracle_rollouts(*env, cem_policy, ds, batches * pmdp.rollouts_per_batch,
                                           pmdp.horizon, rng);
        } else {
            file.records = oracle_rollouts(*env, random_policy, ds, batches * pmdp.rollouts_per_batch,
                                           pmdp.horizon, rng);
        }
    } else {
        const EnsembleModel model = load_model(model_path);
        if (model.d_s != ds.state_dim() || model.d_a != ds.action_dim())
            throw ValidationError("model/dataset dimension mismatch");
        PmdpEngine engine(pmdp);
        if (policy_type == "random") {
            UniformRandomPolicy policy(env->spec().action_bounds);
            for (int b = 0; b < batches; ++b) {
                auto batch = engine.run_batch(model, policy, ds, rng);
                for (auto& rec : batch) file.records.push_back(std::move(rec));
            }
        } else if (policy_type == "cem") {
            CemConfig cem = parse_cem(policy_cfg.value("cem", json::object()), mix_seed(args.seed, 1));
            CemPolicy policy(PlanDynamics::model(model, pmdp, env->spec().action_bounds), cem,
                             mix_seed(args.seed, 2));
            for (int b = 0; b < batches; ++b) {
                policy.set_lambda(engine.lambda());
                auto batch = engine.run_batch(model, policy, ds, rng);
                for (auto& rec : batch) file.records.push_back(std::move(rec));
            }
        } else if (policy_type == "exploiter") {
            CemConfig cem = parse_cem(policy_cfg.value("cem", json::object()), mix_seed(args.seed, 1));
            PMDPConfig unpenalized = pmdp;
            unpenalized.lambda_mode = LambdaMode::fixed(0.0);
            const int k = policy_cfg.value("k", 6);
            const int top = std::min(policy_cfg.value("top", 5), k);
            const auto exploiters = train_exploiters(
                PlanDynamics::model(model, unpenalized, env->spec().action_bounds), *env, ds, k, cem,
                policy_cfg.value("eval_starts", 3), policy_cfg.value("eval_horizon", pmdp.horizon),
                mix_seed(args.seed, 3));
            for (int b = 0; b < batches; ++b) {
                const Exploiter& ex = exploiters[static_cast<std::size_t>(b) % top];
                CemPolicy policy(PlanDynamics::model(model, unpenalized, env->spec().action_bounds),
                                 ex.config, ex.seed);
                auto batch = engine.run_batch(model, policy, ds, rng);
                for (auto& rec : batch) file.records.push_back(std::move(rec));
            }
        } else {
            throw ValidationError("policy type must be random, cem or exploiter");
        }
    }

    rollouts_write(file, out_path(args, "rollouts"));
    write_manifest(args, "run-pmdp", cfg, {"rollouts.csv", "rollouts.meta.json"});
    return 0;
}

std::vector<PenaltyKind> parse_kinds(const json& cfg) {
    if (!cfg.contains("kinds")) return {kAllPenaltyKinds, kAllPenaltyKinds + 6};
    std::vector<PenaltyKind> kinds;
    for (const auto& name : cfg.at("kinds")) kinds.push_back(penalty_kind_from_name(name.get<std::string>()));
    return kinds;
}

int cmd_eval_transfer(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"model", "dataset", "kinds", "error", "sampled_member_error"},
                 "eval-transfer config");
    const EnsembleModel model = load_model(cfg.at("model").get<std::string>());
    const Dataset ds = dataset_read(cfg.at("dataset").get<std::string>());
    const auto kinds = parse_kinds(cfg);
    const std::string error_kind = cfg.value("error", "mse");
    const TrueErrorMode mode = cfg.value("sampled_member_error", false) ? TrueErrorMode::SampledMember
                                                                        : TrueErrorMode::EliteMixtureMean;
    CalibrationReport report;
    if (error_kind == "mse")
        report = transfer_calibration(model, ds, kinds, args.seed, mode);
    else if (error_kind == "nll")
        report = log_likelihood_calibration(model, ds, kinds, args.seed);
    else
        throw ValidationError("error must be 'mse' or 'nll'");

    const bool in_distribution = model.train_env_id == ds.meta.env_id &&
                                 model.train_tier == ds.meta.tier && model.train_seed == ds.meta.seed;
    std::ofstream out(out_path(args, "calibration.json"));
    out << calibration_to_json(report, in_distribution).dump(2) << "\n";
    calibration_pairs_csv(report, out_path(args, "calibration_pairs.csv"));
    write_manifest(args, "eval-transfer", cfg, {"calibration.json", "calibration_pairs.csv"});
    return 0;
}

int cmd_eval_replay(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"rollouts", "env_id", "dataset"}, "eval-replay config");
    RolloutFile file = rollouts_read(cfg.at("rollouts").get<std::string>());
    auto env = make_env(cfg.at("env_id").get<std::string>());
    const Dataset ds = dataset_read(cfg.at("dataset").get<std::string>());
    replay_rollouts(file.records, *env, ds);
    file.has_errors = true;
    rollouts_write(file, out_path(args, "rollouts_replayed"));
    std::vector<std::string> outputs{"rollouts_replayed.csv", "rollouts_replayed.meta.json"};

    bool shared_horizon = true;
    for (const auto& rec : file.records)
        shared_horizon = shared_horizon && rec.steps() == file.records.front().steps();
    if (shared_horizon) {
        error_curves_csv(error_curves(file.records), out_path(args, "error_curves.csv"));
        outputs.push_back("error_curves.csv");
    }
    write_manifest(args, "eval-replay", cfg, outputs);
    return 0;
}

int cmd_eval_ood(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"rollouts", "percentiles", "kinds"}, "eval-ood config");
    const RolloutFile file = rollouts_read(cfg.at("rollouts").get<std::string>());
    if (!file.has_errors) throw ValidationError("rollouts lack replay errors; run eval-replay first");
    const std::vector<int> percentiles = cfg.contains("percentiles")
                                             ? cfg.at("percentiles").get<std::vector<int>>()
                                             : std::vector<int>{90, 95, 99};
    const OODReport report = ood_event_report(file.records, percentiles, parse_kinds(cfg));
    std::ofstream out(out_path(args, "ood.json"));
    out << ood_to_json(report).dump(2) << "\n";
    ood_pr_csv(report, out_path(args, "pr_curves.csv"));
    write_manifest(args, "eval-ood", cfg, {"ood.json", "pr_curves.csv"});
    return 0;
}

int cmd_sweep(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"env_id", "dataset", "space", "strategy", "budget"}, "sweep config");
    auto env = make_env(cfg.at("env_id").get<std::string>());
    const Dataset ds = dataset_read(cfg.at("dataset").get<std::string>());

    SearchSpace space;
    if (cfg.contains("space")) {
        const json& s = cfg["space"];
        require_keys(s,
                     {"penalties", "auto_lambda", "lambda_min", "lambda_max", "constraint_min",
                      "constraint_max", "h_min", "h_max", "n_min", "n_max"},
                     "space config");
        if (s.contains("penalties")) {
            space.penalties.clear();
            for (const auto& name : s["penalties"])
                space.penalties.push_back(penalty_kind_from_name(name.get<std::string>()));
        }
        space.auto_lambda = s.value("auto_lambda", false);
        space.lambda_min = s.value("lambda_min", space.lambda_min);
        space.lambda_max = s.value("lambda_max", space.lambda_max);
        space.constraint_min = s.value("constraint_min", space.constraint_min);
        space.constraint_max = s.value("constraint_max", space.constraint_max);
        space.h_min = s.value("h_min", space.h_min);
        space.h_max = s.value("h_max", space.h_max);
        space.n_min = s.value("n_min", space.n_min);
        space.n_max = s.value("n_max", space.n_max);
    }

    SearchStrategy strategy;
    {
        const json& s = cfg.value("strategy", json{{"kind", "random"}});
        require_keys(s, {"kind", "k", "eta", "grid"}, "strategy config");
        const std::string kind = s.value("kind", "random");
        if (kind == "grid")
            strategy.kind = SearchStrategy::Kind::Grid;
        else if (kind == "random")
            strategy.kind = SearchStrategy::Kind::Random;
        else if (kind == "halving")
            strategy.kind = SearchStrategy::Kind::Halving;
        else
            throw ValidationError("strategy kind must be grid, random or halving");
        strategy.k = s.value("k", 8);
        strategy.eta = s.value("eta", 3);
        if (s.contains("grid")) {
            const json& g = s["grid"];
            require_keys(g, {"penalties", "lambdas", "horizons", "n_models"}, "grid config");
            if (g.contains("penalties"))
                for (const auto& name : g["penalties"])
                    strategy.grid_penalties.push_back(penalty_kind_from_name(name.get<std::string>()));
            strategy.grid_lambdas = g.value("lambdas", Vec{});
            strategy.grid_horizons = g.value("horizons", std::vector<int>{});
            strategy.grid_n_models = g.value("n_models", std::vector<int>{});
        }
    }

    TrialBudget budget;
    if (cfg.contains("budget")) {
        const json& b = cfg["budget"];
        require_keys(b,
                     {"iterations", "final_k", "episodes_per_iteration", "tuning_batches_per_iteration",
                      "rollouts_per_batch", "max_plan_horizon", "cem_population", "cem_iterations",
                      "cem_elite_frac", "model"},
                     "budget config");
        budget.iterations = b.value("iterations", budget.iterations);
        budget.final_k = b.value("final_k", budget.final_k);
        budget.episodes_per_iteration = b.value("episodes_per_iteration", budget.episodes_per_iteration);
        budget.tuning_batches_per_iteration =
            b.value("tuning_batches_per_iteration", budget.tuning_batches_per_iteration);
        budget.rollouts_per_batch = b.value("rollouts_per_batch", budget.rollouts_per_batch);
        budget.max_plan_horizon = b.value("max_plan_horizon", budget.max_plan_horizon);
        budget.cem_population = b.value("cem_population", budget.cem_population);
        budget.cem_iterations = b.value("cem_iterations", budget.cem_iterations);
        budget.cem_elite_frac = b.value("cem_elite_frac", budget.cem_elite_frac);
        if (b.contains("model")) budget.model = model_config_from_json(b["model"], 0);
    }

    const auto trials = search(*env, ds, space, strategy, budget, args.seed);

    std::ofstream log(out_path(args, "trials.jsonl"));
    for (const Trial& t : trials) log << trial_to_json(t, true).dump() << "\n";
    json ranked = json::array();
    for (const Trial& t : trials) ranked.push_back(trial_to_json(t, false));
    std::ofstream out(out_path(args, "ranked.json"));
    out << json{{"format", "pessimlab-ranked-v1"}, {"trials", std::move(ranked)}}.dump(2) << "\n";
    write_manifest(args, "sweep", cfg, {"trials.jsonl", "ranked.json"});
    return 0;
}

int cmd_report(const CliArgs& args, const json& cfg) {
    require_keys(cfg, {"calibrations", "oods", "aggregate"}, "report config");
    std::vector<std::string> outputs;

    if (cfg.contains("calibrations")) {
        std::ofstream table(out_path(args, "table1.csv"));
        table << "env_id,train_tier,eval_tier,seed,error_kind,penalty,spearman,pearson,skew,kurtosis\n";
        for (const auto& path : cfg["calibrations"]) {
            std::ifstream in(path.get<std::string>());
            if (!in) throw ValidationError("missing calibration file: " + path.get<std::string>());
            const json j = json::parse(in);
            for (const auto& [kind, entry] : j.at("per_kind").items()) {
                table << j.at("env_id").get<std::string>() << "," << j.at("train_tier").get<std::string>()
                      << "," << j.at("eval_tier").get<std::string>() << ","
                      << j.at("seed").get<std::uint64_t>() << "," << j.at("error_kind").get<std::string>()
                      << "," << kind;
                if (entry.value("has_correlations", false))
                    table << "," << format_g17(entry.at("spearman").get<double>()) << ","
                          << format_g17(entry.at("pearson").get<double>());
                else
                    table << ",,";
                if (entry.value("has_shape", false))
                    table << "," << format_g17(entry.at("skew").get<double>()) << ","
                          << format_g17(entry.at("kurtosis").get<double>());
                else
                    table << ",,";
                table << "\n";
            }
        }
        outputs.push_back("table1.csv");
    }

    if (cfg.contains("oods")) {
        std::ofstream table(out_path(args, "table2.csv"));
        table << "source,error_type,percentile,penalty,auc,ap\n";
        for (const auto& path : cfg["oods"]) {
            std::ifstream in(path.get<std::string>());
            if (!in) throw ValidationError("missing ood file: " + path.get<std::string>());
            const json j = json::parse(in);
            for (const auto& [type, by_p] : j.at("cells").items())
                for (const auto& [p, by_kind] : by_p.items())
                    for (const auto& [kind, cell] : by_kind.items()) {
                        if (kind == "oracle_auc" || kind == "positives") continue;
                        table << path.get<std::string>() << "," << type << "," << p << "," << kind << ","
                              << format_g17(cell.at("auc").get<double>()) << ","
                              << format_g17(cell.at("ap").get<double>()) << "\n";
                    }
        }
        outputs.push_back("table2.csv");
    }

    if (cfg.contains("aggregate")) {
        const json& agg = cfg["aggregate"];
        require_keys(agg, {"tasks", "resamples", "level"}, "aggregate config");
        std::vector<Vec> cand, base;
        json tasks_echo = json::array();
        for (const auto& task : agg.at("tasks")) {
            require_keys(task, {"name", "candidate", "baseline", "candidate_log", "baseline_log"},
                         "aggregate task");
            const auto load_scores = [&](const char* inline_key, const char* log_key) -> Vec {
                if (task.contains(inline_key)) return task.at(inline_key).get<Vec>();
                std::ifstream in(task.at(log_key).get<std::string>());
                if (!in) throw ValidationError("missing trial log for aggregate task");
                Vec scores;
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    const json t = json::parse(line);
                    if (t.contains("objective")) scores.push_back(t["objective"].get<double>());
                }
                if (scores.empty()) throw ValidationError("trial log has no objectives");
                return scores;
            };
            cand.push_back(load_scores("candidate", "candidate_log"));
            base.push_back(load_scores("baseline", "baseline_log"));
            tasks_echo.push_back(task.value("name", ""));
        }
        const int resamples = agg.value("resamples", 2000);
        const double level = agg.value("level", 0.95);
        const std::uint64_t ci_seed = mix_seed(args.seed, 0xa663);
        const auto ci_json = [](const CiEstimate& ci) {
            return json{{"point", ci.point}, {"lo", ci.lo}, {"hi", ci.hi}};
        };
        json rliable{
            {"format", "pessimlab-rliable-v1"},
            {"tasks", tasks_echo},
            {"candidate",
             {{"mean", ci_json(bootstrap_ci(cand, AggregateStat::Mean, resamples, level, ci_seed))},
              {"median", ci_json(bootstrap_ci(cand, AggregateStat::Median, resamples, level, ci_seed + 1))},
              {"iqm", ci_json(bootstrap_ci(cand, AggregateStat::Iqm, resamples, level, ci_seed + 2))}}},
            {"baseline",
             {{"mean", ci_json(bootstrap_ci(base, AggregateStat::Mean, resamples, level, ci_seed + 3))}}},
            {"probability_of_improvement", probability_of_improvement(cand, base)}};
        std::ofstream out(out_path(args, "rliable.json"));
        out << rliable.dump(2) << "\n";
        outputs.push_back("rliable.json");
    }

    write_manifest(args, "report", cfg, outputs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pessimlab: offline model-based RL uncertainty-penalty laboratory"};
    app.require_subcommand(1);

    CliArgs args;
    app.add_option("--config", args.config_file, "JSON config file")->required();
    app.add_option("--out", args.out_dir, "output directory")->required();
    app.add_option("--seed", args.seed, "base seed")->default_val(0);
    app.add_option("--workers", args.workers, "worker threads (default: PESSIMLAB_WORKERS or cores)")
        ->default_val(0);

    const std::map<std::string, int (*)(const CliArgs&, const json&)> commands{
        {"gen-data", cmd_gen_data},       {"train-dynamics", cmd_train_dynamics},
        {"run-pmdp", cmd_run_pmdp},       {"eval-transfer", cmd_eval_transfer},
        {"eval-replay", cmd_eval_replay}, {"eval-ood", cmd_eval_ood},
        {"sweep", cmd_sweep},             {"report", cmd_report}};
    for (const auto& [name, fn] : commands) app.add_subcommand(name, "")->fallthrough();

    CLI11_PARSE(app, argc, argv);

    if (args.workers >= 1) setenv("PESSIMLAB_WORKERS", std::to_string(args.workers).c_str(), 1);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const json cfg = load_config(args.config_file);
        std::error_code ec;
        fs::create_directories(args.out_dir, ec);
        if (ec) throw std::runtime_error("cannot create output directory: " + args.out_dir);
        return commands.at(command)(args, cfg);
    } catch (const ValidationError& e) {
        std::cerr << json{{"error", "validation"}, {"command", command}, {"message", e.what()}}.dump()
                  << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "runtime"}, {"command", command}, {"message", e.what()}}.dump()
                  << std::endl;
        return 2;
    }
}
