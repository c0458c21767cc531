#include "pessimlab/pmdp.hpp"

#include <cmath>
#include <limits>

namespace pessimlab {

void PMDPConfig::validate() const {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must be in (0,1)");
    if (lambda_mode.lambda < 0.0) throw ValidationError("lambda must be >= 0");
    if (lambda_mode.automatic && !(lambda_mode.constraint > 0.0))
        throw ValidationError("constraint must be > 0");
    if (rollouts_per_batch < 1) throw ValidationError("rollouts_per_batch must be >= 1");
    for (const auto& [lo, hi] : state_clip)
        if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
            throw ValidationError("state_clip bounds must be finite");
}

std::pair<double, double> PMDPConfig::clip_for(std::size_t dim) const {
    if (state_clip.empty()) return {-10.0, 10.0};
    if (dim >= state_clip.size()) throw ValidationError("state_clip dimension mismatch");
    return state_clip[dim];
}

namespace {

RolloutRecord roll_one(const EnsembleModel& model, RolloutPolicy& policy, const Dataset& ds,
                       const PMDPConfig& cfg, double lambda, std::uint64_t record_seed,
                       std::size_t start_index) {
    RolloutRecord rec;
    rec.start_index = start_index;
    rec.lambda = lambda;
    if (cfg.record_all_penalties)
        for (PenaltyKind k : kAllPenaltyKinds) rec.penalty_traces[k] = {};

    Rng step_rng(mix_seed(record_seed, 0x57e9));
    Rng penalty_rng(mix_seed(record_seed, 0x9e4a));
    Rng trace_rng(mix_seed(record_seed, 0x77ac));
    policy.reset(record_seed);

    Vec state = ds.transitions[start_index].state;
    for (int t = 0; t < cfg.horizon; ++t) {
        const Vec action = policy.act(state);
        const EnsemblePrediction pred = predict(model, state, action);

        PenaltyContext ctx = cfg.penalty_ctx;
        ctx.member_selector = &penalty_rng;
        const double u = compute_penalty(cfg.penalty_kind, pred, ctx);

        if (cfg.record_all_penalties) {
            for (PenaltyKind k : kAllPenaltyKinds) {
                if (k == cfg.penalty_kind) {
                    rec.penalty_traces[k].push_back(u);
                    continue;
                }
                PenaltyContext tctx = cfg.penalty_ctx;
                tctx.member_selector = &trace_rng;
                rec.penalty_traces[k].push_back(compute_penalty(k, pred, tctx));
            }
        }

        // Sample the transition from the already-computed member Gaussians.
        const auto elites = model.elite_indices();
        const std::size_t member = elites[step_rng.index(elites.size())];
        const DiagonalGaussian& g = pred.members[member];
        Vec next(model.d_s);
        double reward = 0.0;
        for (std::size_t d = 0; d < model.output_dim(); ++d) {
            const double draw = g.mean[d] + std::sqrt(g.var[d]) * step_rng.normal();
            if (d < model.d_s)
                next[d] = draw;
            else
                reward = draw;
        }

        if (!all_finite(next) || !std::isfinite(reward)) {
            rec.truncated = true;
            break;
        }
        for (std::size_t d = 0; d < next.size(); ++d) {
            const auto [lo, hi] = cfg.clip_for(d);
            next[d] = clip(next[d], lo, hi);
        }

        rec.states.push_back(state);
        rec.actions.push_back(action);
        rec.next_states.push_back(next);
        rec.model_rewards.push_back(reward);
        rec.penalties.push_back(u);
        rec.penalized_rewards.push_back(reward - lambda * u);
        rec.member_indices.push_back(static_cast<int>(member));
        state = std::move(next);
    }
    if (rec.truncated && cfg.record_all_penalties)
        for (auto& [kind, trace] : rec.penalty_traces) trace.resize(rec.states.size());
    return rec;
}

}  // namespace

std::vector<RolloutRecord> rollout(const EnsembleModel& model, RolloutPolicy& policy, const Dataset& ds,
                                   const PMDPConfig& cfg, Rng& rng) {
    cfg.validate();
    if (ds.state_dim() != model.d_s || ds.action_dim() != model.d_a)
        throw ValidationError("dataset/model dimension mismatch");
    const double lambda = cfg.lambda_mode.lambda;
    std::vector<RolloutRecord> records;
    records.reserve(cfg.rollouts_per_batch);
    for (int r = 0; r < cfg.rollouts_per_batch; ++r) {
        const std::size_t start = rng.index(ds.size());
        const std::uint64_t record_seed = mix_seed(cfg.seed, rng.next());
        records.push_back(roll_one(model, policy, ds, cfg, lambda, record_seed, start));
    }
    return records;
}

double auto_lambda_update(double log_lambda, const Vec& penalties, double constraint, double step) {
    if (penalties.empty()) throw ValidationError("auto_lambda_update needs penalties");
    if (!all_finite(penalties)) throw ValidationError("non-finite penalty");
    if (!(step > 0.0)) throw ValidationError("step must be > 0");
    const double lambda = std::exp(log_lambda);
    double mean_charge = 0.0;
    for (double u : penalties) mean_charge += lambda * u;
    mean_charge /= static_cast<double>(penalties.size());
    return log_lambda + step * (constraint - mean_charge);
}

double penalized_return(const RolloutRecord& record, double gamma) {
    if (record.steps() == 0) throw ValidationError("empty rollout record");
    double total = 0.0, discount = 1.0;
    for (double r : record.penalized_rewards) {
        total += discount * r;
        discount *= gamma;
    }
    return total;
}

PmdpEngine::PmdpEngine(PMDPConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    log_lambda_ = std::log(std::max(cfg_.lambda_mode.lambda, 1e-300));
    if (!cfg_.lambda_mode.automatic && cfg_.lambda_mode.lambda == 0.0)
        log_lambda_ = -std::numeric_limits<double>::infinity();
}

std::vector<RolloutRecord> PmdpEngine::run_batch(const EnsembleModel& model, RolloutPolicy& policy,
                                                 const Dataset& ds, Rng& rng) {
    PMDPConfig cfg = cfg_;
    cfg.lambda_mode.lambda = lambda();
    std::vector<RolloutRecord> records = rollout(model, policy, ds, cfg, rng);
    if (cfg_.lambda_mode.automatic) {
        Vec batch_penalties;
        for (const RolloutRecord& rec : records)
            batch_penalties.insert(batch_penalties.end(), rec.penalties.begin(), rec.penalties.end());
        if (!batch_penalties.empty())
            log_lambda_ = auto_lambda_update(log_lambda_, batch_penalties, cfg_.lambda_mode.constraint,
                                             cfg_.lambda_mode.step);
    }
    return records;
}

}  // namespace pessimlab
