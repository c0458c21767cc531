#pragma once

#include <map>

#include "pessimlab/dynamics.hpp"
#include "pessimlab/penalty.hpp"
#include "pessimlab/policy.hpp"

namespace pessimlab {

struct LambdaMode {
    bool automatic = false;
    double lambda = 1.0;        // fixed weight when !automatic, lambda_0 otherwise
    double constraint = 1.0;    // capital-Lambda target for the automatic mode
    double step = 0.05;         // log-space step size alpha

    static LambdaMode fixed(double lambda_value) {
        LambdaMode m;
        m.lambda = lambda_value;
        return m;
    }
    static LambdaMode automatic_mode(double constraint, double step = 0.05, double lambda0 = 1.0) {
        LambdaMode m;
        m.automatic = true;
        m.constraint = constraint;
        m.step = step;
        m.lambda = lambda0;
        return m;
    }
};

struct PMDPConfig {
    PenaltyKind penalty_kind = PenaltyKind::EnsembleStd;
    LambdaMode lambda_mode;
    int horizon = 5;
    double gamma = 0.99;
    std::vector<std::pair<double, double>> state_clip;  // empty = [-10, 10] everywhere
    int rollouts_per_batch = 32;
    std::uint64_t seed = 0;
    PenaltyContext penalty_ctx;  // member_selector is managed by the engine
    bool record_all_penalties = true;

    void validate() const;
    std::pair<double, double> clip_for(std::size_t dim) const;
};

struct RolloutRecord {
    std::size_t start_index = 0;  // dataset row the start state came from
    double lambda = 0.0;          // weight in force for this record
    std::vector<Vec> states;      // s_t before the step, t = 0..h-1
    std::vector<Vec> actions;
    std::vector<Vec> next_states;  // model next state after clipping
    Vec model_rewards;
    Vec penalties;          // u_t for the active kind
    Vec penalized_rewards;  // r_t - lambda * u_t
    std::vector<int> member_indices;
    std::map<PenaltyKind, Vec> penalty_traces;  // all six kinds, when recorded
    bool truncated = false;                     // non-finite model output hit

    // Attached by protocols::replay_rollouts.
    Vec true_mse;
    Vec dist_error;
    bool replay_clipped = false;

    std::size_t steps() const { return states.size(); }
};

// One batch of h-step branched rollouts inside the model, starting from
// dataset states, with rewards penalized at the config's current weight.
std::vector<RolloutRecord> rollout(const EnsembleModel& model, RolloutPolicy& policy, const Dataset& ds,
                                   const PMDPConfig& cfg, Rng& rng);

// log-lambda update toward the constraint E[lambda * u] = Lambda.
double auto_lambda_update(double log_lambda, const Vec& penalties, double constraint, double step);

double penalized_return(const RolloutRecord& record, double gamma);

// Holds the mutable lambda state across batches (updated once per batch in
// the automatic mode).
class PmdpEngine {
  public:
    explicit PmdpEngine(PMDPConfig cfg);

    double lambda() const { return std::exp(log_lambda_); }
    const PMDPConfig& config() const { return cfg_; }

    std::vector<RolloutRecord> run_batch(const EnsembleModel& model, RolloutPolicy& policy,
                                         const Dataset& ds, Rng& rng);

  private:
    PMDPConfig cfg_;
    double log_lambda_;
};

}  // namespace pessimlab
