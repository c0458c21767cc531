#include "pessimlab/search.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>

namespace pessimlab {

void SearchSpace::validate() const {
    if (penalties.empty()) throw ValidationError("empty penalty space");
    if (!(lambda_min > 0.0 && lambda_min <= lambda_max)) throw ValidationError("bad lambda range");
    if (!(constraint_min > 0.0 && constraint_min <= constraint_max))
        throw ValidationError("bad constraint range");
    if (h_min < 1 || h_min > h_max) throw ValidationError("bad horizon range");
    if (n_min < 1 || n_min > n_max || n_max > 15) throw ValidationError("bad model-count range");
}

std::uint64_t TrialConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    mix(static_cast<std::uint64_t>(penalty));
    mix(auto_lambda ? 1 : 0);
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(lambda));
    std::memcpy(&bits, &lambda, sizeof(bits));
    mix(bits);
    mix(static_cast<std::uint64_t>(horizon));
    mix(static_cast<std::uint64_t>(n_models));
    return h;
}

namespace {

int elite_count_rule(int n_models) { return std::max(1, (5 * n_models) / 7); }

CemConfig planner_config(const TrialBudget& budget, int horizon, std::uint64_t seed) {
    CemConfig cem;
    cem.plan_horizon = std::min(horizon, budget.max_plan_horizon);
    cem.population = budget.cem_population;
    cem.iterations = budget.cem_iterations;
    cem.elite_frac = budget.cem_elite_frac;
    cem.init_std = 0.5;
    cem.seed = seed;
    return cem;
}

}  // namespace

Trial run_trial(OracleEnv& env, const Dataset& train_ds, const TrialConfig& config,
                const TrialBudget& budget, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    Trial trial;
    trial.config = config;
    trial.seed = seed;
    try {
        if (!train_ds.meta.has_references && !env.spec().reference_returns.known)
            throw ValidationError("reference returns unavailable for normalization");
        EnvSpec spec = env.spec();
        if (!spec.reference_returns.known) {
            spec.reference_returns.random = train_ds.meta.reference_random;
            spec.reference_returns.expert = train_ds.meta.reference_expert;
            spec.reference_returns.known = true;
        }

        ModelConfig mc = budget.model;
        mc.n_total = config.n_models;
        mc.n_elite = elite_count_rule(config.n_models);
        mc.seed = mix_seed(seed, 0x3000);
        const EnsembleModel model = train_ensemble(train_ds, mc);

        PMDPConfig pmdp;
        pmdp.penalty_kind = config.penalty;
        pmdp.lambda_mode = config.auto_lambda ? LambdaMode::automatic_mode(config.lambda)
                                              : LambdaMode::fixed(config.lambda);
        pmdp.horizon = config.horizon;
        pmdp.rollouts_per_batch = budget.rollouts_per_batch;
        pmdp.seed = mix_seed(seed, 0x4000);
        pmdp.record_all_penalties = false;

        PmdpEngine engine(pmdp);
        CemPolicy policy(PlanDynamics::model(model, pmdp, env.spec().action_bounds),
                         planner_config(budget, config.horizon, mix_seed(seed, 0x5000)),
                         mix_seed(seed, 0x6000));
        UniformRandomPolicy tuning_policy(env.spec().action_bounds);
        Rng batch_rng(mix_seed(seed, 0x7000));

        for (int iter = 0; iter < budget.iterations; ++iter) {
            if (pmdp.lambda_mode.automatic) {
                for (int b = 0; b < budget.tuning_batches_per_iteration; ++b)
                    engine.run_batch(model, tuning_policy, train_ds, batch_rng);
            }
            policy.set_lambda(engine.lambda());
            trial.lambda_history.push_back(engine.lambda());

            const Vec returns =
                evaluate_policy(policy, env, budget.episodes_per_iteration, mix_seed(seed, 0x8000 + iter));
            trial.iteration_scores.push_back(normalized_score(mean_of(returns), spec));
        }

        const int k = std::min(budget.final_k, static_cast<int>(trial.iteration_scores.size()));
        Vec tail(trial.iteration_scores.end() - k, trial.iteration_scores.end());
        trial.objective = mean_of(tail);
        trial.has_objective = true;
    } catch (const std::exception& e) {
        trial.status = "failed";
        trial.error = e.what();
    }
    trial.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trial;
}

namespace {

TrialConfig sample_config(const SearchSpace& space, Rng& rng) {
    TrialConfig cfg;
    cfg.penalty = space.penalties[rng.index(space.penalties.size())];
    cfg.auto_lambda = space.auto_lambda;
    if (space.auto_lambda)
        cfg.lambda = space.constraint_min +
                     (space.constraint_max - space.constraint_min) * rng.uniform01();
    else
        cfg.lambda = std::exp(rng.uniform(std::log(space.lambda_min), std::log(space.lambda_max)));
    cfg.horizon = static_cast<int>(rng.integer(space.h_min, space.h_max));
    cfg.n_models = static_cast<int>(rng.integer(space.n_min, space.n_max));
    return cfg;
}

std::vector<TrialConfig> grid_configs(const SearchSpace& space, const SearchStrategy& strategy) {
    const auto penalties = strategy.grid_penalties.empty()
                               ? std::vector<PenaltyKind>{PenaltyKind::EnsembleStd}
                               : strategy.grid_penalties;
    const Vec lambdas = strategy.grid_lambdas.empty() ? Vec{1.0} : strategy.grid_lambdas;
    const auto horizons = strategy.grid_horizons.empty() ? std::vector<int>{space.h_min}
                                                         : strategy.grid_horizons;
    const auto model_counts =
        strategy.grid_n_models.empty() ? std::vector<int>{space.n_min} : strategy.grid_n_models;
    std::vector<TrialConfig> configs;
    for (PenaltyKind p : penalties)
        for (double lambda : lambdas)
            for (int h : horizons)
                for (int n : model_counts) {
                    TrialConfig cfg;
                    cfg.penalty = p;
                    cfg.auto_lambda = space.auto_lambda;
                    cfg.lambda = lambda;
                    cfg.horizon = h;
                    cfg.n_models = n;
                    configs.push_back(cfg);
                }
    return configs;
}

void sort_trials(std::vector<Trial>& trials) {
    std::stable_sort(trials.begin(), trials.end(), [](const Trial& a, const Trial& b) {
        if (a.has_objective != b.has_objective) return a.has_objective;
        if (!a.has_objective) return false;
        if (a.objective != b.objective) return a.objective > b.objective;
        return a.config.hash() < b.config.hash();
    });
}

}  // namespace

std::size_t expected_trial_count(const SearchStrategy& strategy) {
    using Kind = SearchStrategy::Kind;
    switch (strategy.kind) {
        case Kind::Grid: {
            const auto n = [](std::size_t v) { return v == 0 ? 1 : v; };
            return n(strategy.grid_penalties.size()) * n(strategy.grid_lambdas.size()) *
                   n(strategy.grid_horizons.size()) * n(strategy.grid_n_models.size());
        }
        case Kind::Random: return static_cast<std::size_t>(strategy.k);
        case Kind::Halving: {
            std::size_t total = 0;
            for (int n = strategy.k; n >= 1; n /= strategy.eta) {
                total += static_cast<std::size_t>(n);
                if (n == 1) break;
            }
            return total;
        }
    }
    throw ValidationError("unknown strategy");
}

std::vector<Trial> search(OracleEnv& env, const Dataset& train_ds, const SearchSpace& space,
                          const SearchStrategy& strategy, const TrialBudget& budget, std::uint64_t seed) {
    space.validate();
    using Kind = SearchStrategy::Kind;
    std::vector<Trial> trials;

    if (strategy.kind == Kind::Grid || strategy.kind == Kind::Random) {
        std::vector<TrialConfig> configs;
        if (strategy.kind == Kind::Grid) {
            configs = grid_configs(space, strategy);
        } else {
            if (strategy.k < 1) throw ValidationError("random search needs k >= 1");
            Rng rng(mix_seed(seed, 0xc0f1));
            for (int i = 0; i < strategy.k; ++i) configs.push_back(sample_config(space, rng));
        }
        for (std::size_t i = 0; i < configs.size(); ++i)
            trials.push_back(run_trial(env, train_ds, configs[i], budget, mix_seed(seed, i)));
        sort_trials(trials);
        return trials;
    }

    // Successive halving: k configs at the base budget, promote the top 1/eta
    // with an eta-times larger budget, repeat down to one survivor.
    if (strategy.k < 1 || strategy.eta < 2) throw ValidationError("halving needs k >= 1, eta >= 2");
    Rng rng(mix_seed(seed, 0xc0f1));
    std::vector<TrialConfig> rung;
    for (int i = 0; i < strategy.k; ++i) rung.push_back(sample_config(space, rng));

    int multiplier = 1;
    std::size_t trial_id = 0;
    while (true) {
        TrialBudget rung_budget = budget;
        rung_budget.iterations = budget.iterations * multiplier;
        std::vector<Trial> rung_trials;
        for (const TrialConfig& cfg : rung)
            rung_trials.push_back(run_trial(env, train_ds, cfg, rung_budget, mix_seed(seed, trial_id++)));
        sort_trials(rung_trials);
        for (const Trial& t : rung_trials) trials.push_back(t);
        if (rung.size() == 1) break;
        const std::size_t keep = std::max<std::size_t>(1, rung.size() / static_cast<std::size_t>(strategy.eta));
        rung.clear();
        for (std::size_t i = 0; i < keep; ++i) rung.push_back(rung_trials[i].config);
        multiplier *= strategy.eta;
    }
    sort_trials(trials);
    return trials;
}

TrialConfig single_setup_config() {
    TrialConfig cfg;
    cfg.penalty = PenaltyKind::EnsembleStd;
    cfg.auto_lambda = true;
    cfg.lambda = 1.0;  // constraint
    cfg.horizon = 20;
    cfg.n_models = 10;
    return cfg;
}

TrialConfig two_setup_alternate_config() {
    TrialConfig cfg = single_setup_config();
    cfg.lambda = 0.5;
    cfg.horizon = 10;
    return cfg;
}

TrialConfig default_baseline_config() {
    TrialConfig cfg;
    cfg.penalty = PenaltyKind::MaxAleatoric;
    cfg.auto_lambda = false;
    cfg.lambda = 1.0;
    cfg.horizon = 5;
    cfg.n_models = 7;
    return cfg;
}

AggregateReport single_setup_run(const SingleSetupOptions& options, std::uint64_t seed) {
    if (options.env_ids.empty() || options.tiers.empty() || options.seeds < 1)
        throw ValidationError("single_setup_run needs envs, tiers and seeds");

    AggregateReport report;
    const TrialConfig candidate = single_setup_config();
    const TrialConfig alternate = two_setup_alternate_config();
    const TrialConfig baseline = default_baseline_config();

    for (const std::string& env_id : options.env_ids) {
        for (const std::string& tier : options.tiers) {
            TaskScores task;
            task.task = env_id + "/" + tier;
            for (int s = 0; s < options.seeds; ++s) {
                const std::uint64_t task_seed = mix_seed(seed, std::hash<std::string>{}(task.task) + s);
                auto env = make_env(env_id);
                calibrate_reference_returns(*env, mix_seed(task_seed, 0xaef0), 3);
                Dataset ds = generate_dataset(*env, tier, options.dataset_size, mix_seed(task_seed, 0xd5));

                Trial cand = run_trial(*env, ds, candidate, options.budget, mix_seed(task_seed, 1));
                if (options.two_setup_argmax) {
                    Trial alt = run_trial(*env, ds, alternate, options.budget, mix_seed(task_seed, 2));
                    if (alt.has_objective && (!cand.has_objective || alt.objective > cand.objective))
                        cand = std::move(alt);
                }
                Trial base = run_trial(*env, ds, baseline, options.budget, mix_seed(task_seed, 3));
                if (!cand.has_objective || !base.has_objective)
                    throw std::runtime_error("trial failed: " +
                                             (cand.has_objective ? base.error : cand.error));
                task.candidate.push_back(cand.objective);
                task.baseline.push_back(base.objective);
            }
            report.tasks.push_back(std::move(task));
        }
    }

    std::vector<Vec> cand_by_task, base_by_task;
    for (const TaskScores& t : report.tasks) {
        cand_by_task.push_back(t.candidate);
        base_by_task.push_back(t.baseline);
    }
    const std::uint64_t ci_seed = mix_seed(seed, 0xb007);
    report.candidate_mean = bootstrap_ci(cand_by_task, AggregateStat::Mean, 2000, 0.95, ci_seed);
    report.candidate_median = bootstrap_ci(cand_by_task, AggregateStat::Median, 2000, 0.95, ci_seed + 1);
    report.candidate_iqm = bootstrap_ci(cand_by_task, AggregateStat::Iqm, 2000, 0.95, ci_seed + 2);
    report.baseline_mean = bootstrap_ci(base_by_task, AggregateStat::Mean, 2000, 0.95, ci_seed + 3);
    report.probability_of_improvement = probability_of_improvement(cand_by_task, base_by_task);

    std::map<std::string, Vec> env_cand, env_base;
    for (const TaskScores& t : report.tasks) {
        const std::string env_id = t.task.substr(0, t.task.find('/'));
        env_cand[env_id].insert(env_cand[env_id].end(), t.candidate.begin(), t.candidate.end());
        env_base[env_id].insert(env_base[env_id].end(), t.baseline.begin(), t.baseline.end());
    }
    for (const auto& [env_id, scores] : env_cand) report.per_env_candidate_mean[env_id] = mean_of(scores);
    for (const auto& [env_id, scores] : env_base) report.per_env_baseline_mean[env_id] = mean_of(scores);
    return report;
}

}  // namespace pessimlab
