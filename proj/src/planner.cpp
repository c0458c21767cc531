#include "pessimlab/planner.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace pessimlab {

void CemConfig::validate() const {
    if (plan_horizon < 1) throw ValidationError("plan_horizon must be >= 1");
    if (!(elite_frac > 0.0 && elite_frac < 1.0)) throw ValidationError("elite_frac must be in (0,1)");
    if (elite_count() < 2) throw ValidationError("ceil(elite_frac * population) must be >= 2");
    if (iterations < 1) throw ValidationError("iterations must be >= 1");
    if (action_noise < 0.0) throw ValidationError("action_noise must be >= 0");
}

int CemConfig::elite_count() const {
    return static_cast<int>(std::ceil(elite_frac * static_cast<double>(population)));
}

PlanDynamics PlanDynamics::oracle(const OracleEnv& env) {
    PlanDynamics dyn;
    dyn.env_ = &env;
    dyn.action_bounds_ = env.spec().action_bounds;
    dyn.gamma_ = 1.0;  // finite-horizon undiscounted planning on the true dynamics
    return dyn;
}

PlanDynamics PlanDynamics::model(const EnsembleModel& model, PMDPConfig pmdp,
                                 std::vector<std::pair<double, double>> action_bounds) {
    pmdp.validate();
    PlanDynamics dyn;
    dyn.model_ = &model;
    dyn.pmdp_ = std::move(pmdp);
    dyn.action_bounds_ = std::move(action_bounds);
    dyn.gamma_ = dyn.pmdp_.gamma;
    return dyn;
}

StepResult PlanDynamics::step(const Vec& state, const Vec& action, Rng& rng) const {
    if (env_ != nullptr) return env_->step_from(state, action);

    const double lambda = pmdp_.lambda_mode.lambda;
    StepResult out;
    double reward;
    if (lambda > 0.0) {
        const EnsemblePrediction pred = predict(*model_, state, action);
        PenaltyContext ctx = pmdp_.penalty_ctx;
        ctx.member_selector = &rng;
        const double u = compute_penalty(pmdp_.penalty_kind, pred, ctx);
        const auto elites = model_->elite_indices();
        const DiagonalGaussian& g = pred.members[elites[rng.index(elites.size())]];
        out.next_state.resize(model_->d_s);
        reward = 0.0;
        for (std::size_t d = 0; d < model_->output_dim(); ++d) {
            const double draw = g.mean[d] + std::sqrt(g.var[d]) * rng.normal();
            if (d < model_->d_s)
                out.next_state[d] = draw;
            else
                reward = draw;
        }
        reward -= lambda * u;
    } else {
        const SampleResult sr = sample_next(*model_, state, action, rng);
        out.next_state = sr.next_state;
        reward = sr.reward;
    }
    for (std::size_t d = 0; d < out.next_state.size(); ++d) {
        const auto [lo, hi] = pmdp_.clip_for(d);
        out.next_state[d] = clip(out.next_state[d], lo, hi);
    }
    if (!all_finite(out.next_state) || !std::isfinite(reward))
        throw std::runtime_error("non-finite model output during planning");
    out.reward = reward;
    return out;
}

namespace {

double score_sequence(const PlanDynamics& dyn, const Vec& start, const std::vector<Vec>& actions,
                      Rng& rng) {
    Vec state = start;
    double total = 0.0, discount = 1.0;
    for (const Vec& action : actions) {
        const StepResult sr = dyn.step(state, action, rng);
        total += discount * sr.reward;
        discount *= dyn.gamma();
        state = sr.next_state;
    }
    return total;
}

}  // namespace

CemPlanResult cem_plan_detailed(const PlanDynamics& dyn, const Vec& state, const CemConfig& cfg,
                                Rng& rng) {
    cfg.validate();
    const auto& bounds = dyn.action_bounds();
    const std::size_t d_a = bounds.size();
    const std::size_t horizon = static_cast<std::size_t>(cfg.plan_horizon);

    std::vector<Vec> mean(horizon, Vec(d_a));
    std::vector<Vec> stddev(horizon, Vec(d_a));
    for (std::size_t t = 0; t < horizon; ++t)
        for (std::size_t d = 0; d < d_a; ++d) {
            mean[t][d] = 0.5 * (bounds[d].first + bounds[d].second);
            stddev[t][d] = cfg.init_std * 0.5 * (bounds[d].second - bounds[d].first);
        }

    const std::size_t pop = static_cast<std::size_t>(cfg.population);
    std::vector<std::vector<Vec>> candidates(pop);
    Vec scores(pop);
    std::vector<Vec> best_sequence;
    double best_score = -std::numeric_limits<double>::infinity();
    CemPlanResult result;

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const std::uint64_t iter_seed = rng.next();
        for (std::size_t c = 0; c < pop; ++c) {
            if (iter > 0 && c == 0 && !best_sequence.empty()) {
                candidates[c] = best_sequence;  // keep the incumbent in the pool
                continue;
            }
            Rng crng(mix_seed(iter_seed, 2 * c));
            auto& seq = candidates[c];
            seq.assign(horizon, Vec(d_a));
            for (std::size_t t = 0; t < horizon; ++t)
                for (std::size_t d = 0; d < d_a; ++d)
                    seq[t][d] = clip(mean[t][d] + stddev[t][d] * crng.normal(), bounds[d].first,
                                     bounds[d].second);
        }
        // Oracle steps are too cheap to amortize thread startup.
        const int workers = dyn.is_model() ? default_workers() : 1;
        parallel_for(pop, workers, [&](std::size_t c) {
            Rng srng(mix_seed(iter_seed, 2 * c + 1));
            scores[c] = score_sequence(dyn, state, candidates[c], srng);
        });

        std::vector<std::size_t> order(pop);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        result.best_score_per_iteration.push_back(scores[order.front()]);
        if (scores[order.front()] >= best_score) {
            best_score = scores[order.front()];
            best_sequence = candidates[order.front()];
        }

        if (scores[order.front()] == scores[order.back()]) continue;  // degenerate population

        const std::size_t n_elite = static_cast<std::size_t>(cfg.elite_count());
        for (std::size_t t = 0; t < horizon; ++t)
            for (std::size_t d = 0; d < d_a; ++d) {
                double m = 0.0;
                for (std::size_t k = 0; k < n_elite; ++k) m += candidates[order[k]][t][d];
                m /= static_cast<double>(n_elite);
                double var = 0.0;
                for (std::size_t k = 0; k < n_elite; ++k) {
                    const double dv = candidates[order[k]][t][d] - m;
                    var += dv * dv;
                }
                mean[t][d] = m;
                stddev[t][d] = std::max(std::sqrt(var / static_cast<double>(n_elite)), 1e-6);
            }
    }

    result.action = mean.front();
    for (std::size_t d = 0; d < d_a; ++d) {
        if (cfg.action_noise > 0.0) result.action[d] += cfg.action_noise * rng.normal();
        result.action[d] = clip(result.action[d], bounds[d].first, bounds[d].second);
    }
    return result;
}

Vec cem_plan(const PlanDynamics& dyn, const Vec& state, const CemConfig& cfg, Rng& rng) {
    return cem_plan_detailed(dyn, state, cfg, rng).action;
}

CemPolicy::CemPolicy(PlanDynamics dynamics, CemConfig cfg, std::uint64_t policy_seed)
    : dynamics_(std::move(dynamics)), cfg_(cfg), policy_seed_(policy_seed), rng_(policy_seed) {
    cfg_.validate();
}

void CemPolicy::reset(std::uint64_t episode_seed) { rng_ = Rng(mix_seed(policy_seed_, episode_seed)); }

Vec CemPolicy::act(const Vec& state) { return cem_plan(dynamics_, state, cfg_, rng_); }

Vec evaluate_policy(RolloutPolicy& policy, const OracleEnv& env, int episodes, std::uint64_t seed) {
    if (episodes < 1) throw ValidationError("episodes must be >= 1");
    Vec returns(episodes, 0.0);
    for (int ep = 0; ep < episodes; ++ep) {
        const std::uint64_t ep_seed = mix_seed(seed, ep);
        policy.reset(ep_seed);
        Vec state = env.reset(ep_seed);
        double total = 0.0;
        for (std::size_t t = 0; t < env.spec().episode_length; ++t) {
            const Vec action = policy.act(state);
            const StepResult sr = env.step_from(state, action);
            total += sr.reward;
            state = sr.next_state;
        }
        returns[ep] = total;
    }
    return returns;
}

double normalized_score(double raw, const EnvSpec& spec) {
    if (!spec.reference_returns.known) throw ValidationError("reference returns not calibrated");
    const double lo = spec.reference_returns.random;
    const double hi = spec.reference_returns.expert;
    if (hi == lo) throw ValidationError("degenerate reference returns");
    return 100.0 * (raw - lo) / (hi - lo);
}

double rollout_return(const PlanDynamics& dyn, RolloutPolicy& policy, const Vec& start, int horizon,
                      std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xd0d0));
    policy.reset(seed);
    Vec state = start;
    double total = 0.0;
    for (int t = 0; t < horizon; ++t) {
        const Vec action = policy.act(state);
        const StepResult sr = dyn.step(state, action, rng);
        total += sr.reward;
        state = sr.next_state;
    }
    return total;
}

std::vector<Exploiter> train_exploiters(const PlanDynamics& model_dyn, const OracleEnv& env,
                                        const Dataset& ds, int k_policies, const CemConfig& cfg,
                                        int eval_starts, int eval_horizon, std::uint64_t seed) {
    if (k_policies < 1) throw ValidationError("k_policies must be >= 1");
    if (eval_starts < 1) throw ValidationError("eval_starts must be >= 1");

    // Shared start states so model and true returns are directly comparable.
    Rng start_rng(mix_seed(seed, 0x57a7));
    std::vector<std::size_t> starts(eval_starts);
    for (auto& s : starts) s = start_rng.index(ds.size());
    const PlanDynamics true_dyn = PlanDynamics::oracle(env);

    std::vector<Exploiter> exploiters(k_policies);
    for (int k = 0; k < k_policies; ++k) {
        Exploiter& ex = exploiters[k];
        ex.seed = mix_seed(seed, 100 + k);
        ex.config = cfg;
        ex.config.seed = ex.seed;
        CemPolicy policy(model_dyn, ex.config, ex.seed);

        double model_total = 0.0, true_total = 0.0;
        ex.eval.per_seed_returns.resize(starts.size());
        for (std::size_t s = 0; s < starts.size(); ++s) {
            const Vec& start = ds.transitions[starts[s]].state;
            const std::uint64_t ep_seed = mix_seed(ex.seed, s);
            model_total += rollout_return(model_dyn, policy, start, eval_horizon, ep_seed);
            const double true_return = rollout_return(true_dyn, policy, start, eval_horizon, ep_seed);
            ex.eval.per_seed_returns[s] = true_return;
            true_total += true_return;
        }
        ex.eval.model_return = model_total / static_cast<double>(starts.size());
        ex.eval.true_return = true_total / static_cast<double>(starts.size());
        ex.eval.gap = ex.eval.model_return - ex.eval.true_return;
    }
    std::stable_sort(exploiters.begin(), exploiters.end(),
                     [](const Exploiter& a, const Exploiter& b) { return a.eval.gap > b.eval.gap; });
    return exploiters;
}

}  // namespace pessimlab
