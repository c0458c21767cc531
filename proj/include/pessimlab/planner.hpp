#pragma once

#include "pessimlab/envlab.hpp"
#include "pessimlab/pmdp.hpp"

namespace pessimlab {

struct CemConfig {
    int plan_horizon = 10;  // L
    int population = 64;    // P
    double elite_frac = 0.15;
    int iterations = 5;  // E
    double init_std = 0.5;
    double action_noise = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    int elite_count() const;
};

// Dynamics a planner can roll candidate action sequences through: either the
// true environment or the penalized model. Model steps return the reward
// already charged with lambda * u.
class PlanDynamics {
  public:
    static PlanDynamics oracle(const OracleEnv& env);
    static PlanDynamics model(const EnsembleModel& model, PMDPConfig pmdp,
                              std::vector<std::pair<double, double>> action_bounds);

    StepResult step(const Vec& state, const Vec& action, Rng& rng) const;
    double gamma() const { return gamma_; }
    void set_lambda(double lambda) { pmdp_.lambda_mode.lambda = lambda; }
    double lambda() const { return pmdp_.lambda_mode.lambda; }
    const std::vector<std::pair<double, double>>& action_bounds() const { return action_bounds_; }
    bool is_model() const { return model_ != nullptr; }

  private:
    PlanDynamics() = default;
    const OracleEnv* env_ = nullptr;
    const EnsembleModel* model_ = nullptr;
    PMDPConfig pmdp_;
    std::vector<std::pair<double, double>> action_bounds_;
    double gamma_ = 1.0;
};

struct CemPlanResult {
    Vec action;
    Vec best_score_per_iteration;
};

// One round of cross-entropy planning from `state`; returns the first action
// of the final mean (plus optional behavior noise), clipped to bounds.
Vec cem_plan(const PlanDynamics& dyn, const Vec& state, const CemConfig& cfg, Rng& rng);
CemPlanResult cem_plan_detailed(const PlanDynamics& dyn, const Vec& state, const CemConfig& cfg, Rng& rng);

// MPC policy: replans with CEM at every step against its own dynamics.
class CemPolicy final : public RolloutPolicy {
  public:
    CemPolicy(PlanDynamics dynamics, CemConfig cfg, std::uint64_t policy_seed);

    void reset(std::uint64_t episode_seed) override;
    Vec act(const Vec& state) override;

    void set_lambda(double lambda) { dynamics_.set_lambda(lambda); }
    std::uint64_t policy_seed() const { return policy_seed_; }
    const CemConfig& config() const { return cfg_; }

  private:
    PlanDynamics dynamics_;
    CemConfig cfg_;
    std::uint64_t policy_seed_;
    Rng rng_;
};

struct EvalResult {
    double model_return = 0.0;  // predicted inside the model
    double true_return = 0.0;   // replayed in the oracle environment
    double gap = 0.0;           // model_return - true_return
    Vec per_seed_returns;       // true returns per evaluation start
};

struct Exploiter {
    std::uint64_t seed = 0;
    CemConfig config;
    EvalResult eval;
};

// Trains k CEM policies planning inside model_dyn (pass it with lambda = 0
// for the exploiter protocol), measures model vs true return from shared
// dataset starts, and ranks them by gap descending (most exploitative first).
std::vector<Exploiter> train_exploiters(const PlanDynamics& model_dyn, const OracleEnv& env,
                                        const Dataset& ds, int k_policies, const CemConfig& cfg,
                                        int eval_starts, int eval_horizon, std::uint64_t seed);

// Undiscounted episode returns in the true environment; deterministic given seed.
Vec evaluate_policy(RolloutPolicy& policy, const OracleEnv& env, int episodes, std::uint64_t seed);

// D4RL-style scaling: 100 * (raw - random_ref) / (expert_ref - random_ref).
double normalized_score(double raw, const EnvSpec& spec);

// Undiscounted return of an h-step rollout of `policy` through `dyn`.
double rollout_return(const PlanDynamics& dyn, RolloutPolicy& policy, const Vec& start, int horizon,
                      std::uint64_t seed);

}  // namespace pessimlab
