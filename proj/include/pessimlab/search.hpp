#pragma once

#include "pessimlab/planner.hpp"
#include "pessimlab/protocols.hpp"

namespace pessimlab {

struct SearchSpace {
    std::vector<PenaltyKind> penalties{kAllPenaltyKinds, kAllPenaltyKinds + 6};
    bool auto_lambda = false;
    double lambda_min = 1.0;  // log-uniform over [1, 100] in the fixed mode
    double lambda_max = 100.0;
    double constraint_min = 0.1;  // (0.1, 10] in the automatic mode
    double constraint_max = 10.0;
    int h_min = 1;
    int h_max = 50;
    int n_min = 1;
    int n_max = 15;

    void validate() const;
};

struct TrialConfig {
    PenaltyKind penalty = PenaltyKind::EnsembleStd;
    bool auto_lambda = false;
    double lambda = 1.0;      // fixed weight, or the constraint when automatic
    int horizon = 5;          // h
    int n_models = 7;         // N; n_elite = max(1, floor(5N/7))
    std::uint64_t hash() const;
};

// Desk-scale control budget shared by every trial in a search.
struct TrialBudget {
    int iterations = 12;            // evaluation iterations; the final_k last ones score
    int final_k = 10;
    int episodes_per_iteration = 1;
    int tuning_batches_per_iteration = 2;  // lambda updates per iteration
    int rollouts_per_batch = 16;
    int max_plan_horizon = 20;  // CEM plan horizon = min(h, this)
    int cem_population = 32;
    int cem_iterations = 4;
    double cem_elite_frac = 0.25;
    ModelConfig model;  // n_total/n_elite/seed overridden per trial
};

struct Trial {
    TrialConfig config;
    std::uint64_t seed = 0;
    std::string status = "ok";  // "ok" | "failed"
    double objective = 0.0;     // mean normalized score over the final_k iterations
    bool has_objective = false;
    Vec iteration_scores;  // normalized score per iteration (the evaluation log)
    Vec lambda_history;    // lambda in force at each iteration
    std::string error;     // failure diagnostic
    double wall_time_s = 0.0;
};

Trial run_trial(OracleEnv& env, const Dataset& train_ds, const TrialConfig& config,
                const TrialBudget& budget, std::uint64_t seed);

struct SearchStrategy {
    enum class Kind { Grid, Random, Halving };
    Kind kind = Kind::Random;
    int k = 8;    // random draw count / halving initial configs
    int eta = 3;  // halving reduction factor
    // grid lattice (explicit lists; empty = a single default value)
    std::vector<PenaltyKind> grid_penalties;
    Vec grid_lambdas;
    std::vector<int> grid_horizons;
    std::vector<int> grid_n_models;
};

// Runs the strategy and returns trials sorted by objective descending,
// ties broken by config hash. Failed trials sort last.
std::vector<Trial> search(OracleEnv& env, const Dataset& train_ds, const SearchSpace& space,
                          const SearchStrategy& strategy, const TrialBudget& budget, std::uint64_t seed);

// Closed-form number of trial executions a strategy will perform.
std::size_t expected_trial_count(const SearchStrategy& strategy);

struct TaskScores {
    std::string task;  // "<env>/<tier>"
    Vec candidate;     // normalized scores per seed
    Vec baseline;
};

struct AggregateReport {
    std::vector<TaskScores> tasks;
    CiEstimate candidate_mean, candidate_median, candidate_iqm;
    CiEstimate baseline_mean;
    double probability_of_improvement = 0.0;
    std::map<std::string, double> per_env_candidate_mean;
    std::map<std::string, double> per_env_baseline_mean;
};

struct SingleSetupOptions {
    std::vector<std::string> env_ids{"pointmass2d", "pendulum1d", "cliffcar"};
    std::vector<std::string> tiers{"medium", "mixed"};
    std::size_t dataset_size = 1500;
    int seeds = 5;
    bool two_setup_argmax = false;  // adds max{(h=10, constraint=0.5), (h=20, constraint=1)}
    TrialBudget budget;
};

// Fixed single-hyperparameter configuration (h=20, constraint 1, ensemble std,
// N=10) against the hand-tuned default baseline (h=5, fixed lambda 1, max
// aleatoric, N=7), aggregated over env x tier tasks.
AggregateReport single_setup_run(const SingleSetupOptions& options, std::uint64_t seed);

TrialConfig single_setup_config();
TrialConfig two_setup_alternate_config();
TrialConfig default_baseline_config();

}  // namespace pessimlab
