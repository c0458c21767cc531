#include "pessimlab/protocols.hpp"

#include <cmath>
#include <limits>

#include "pessimlab/planner.hpp"

namespace pessimlab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Vec elite_mixture_state_mean(const EnsemblePrediction& pred, std::size_t d_s) {
    Vec mean(d_s, 0.0);
    std::size_t n = 0;
    const Vec* first = nullptr;
    bool identical = true;
    for (std::size_t i = 0; i < pred.members.size(); ++i) {
        if (!pred.elite_mask[i]) continue;
        ++n;
        if (first == nullptr)
            first = &pred.members[i].mean;
        else
            identical = identical && pred.members[i].mean == *first;
        for (std::size_t d = 0; d < d_s; ++d) mean[d] += pred.members[i].mean[d];
    }
    if (identical && first != nullptr) return Vec(first->begin(), first->begin() + d_s);
    for (double& m : mean) m /= static_cast<double>(n);
    return mean;
}

double mixture_nll(const EnsemblePrediction& pred, const Vec& target) {
    // -log of the equal-weight Gaussian mixture density, via logsumexp.
    Vec lls(pred.members.size());
    for (std::size_t i = 0; i < pred.members.size(); ++i) {
        const DiagonalGaussian& g = pred.members[i];
        double ll = 0.0;
        for (std::size_t d = 0; d < target.size(); ++d) {
            const double r = target[d] - g.mean[d];
            ll += -0.5 * (kLog2Pi + std::log(g.var[d]) + r * r / g.var[d]);
        }
        lls[i] = ll;
    }
    const double peak = *std::max_element(lls.begin(), lls.end());
    double acc = 0.0;
    for (double ll : lls) acc += std::exp(ll - peak);
    return -(peak + std::log(acc / static_cast<double>(lls.size())));
}

CalibrationReport calibrate(const EnsembleModel& model, const Dataset& eval_ds,
                            const std::vector<PenaltyKind>& kinds, std::uint64_t seed,
                            TrueErrorMode mode, bool use_nll) {
    if (eval_ds.state_dim() != model.d_s || eval_ds.action_dim() != model.d_a)
        throw ValidationError("dataset/model dimension mismatch");
    if (kinds.empty()) throw ValidationError("no penalty kinds requested");

    CalibrationReport report;
    report.env_id = eval_ds.meta.env_id;
    report.train_tier = model.train_tier;
    report.eval_tier = eval_ds.meta.tier;
    report.n_models = static_cast<int>(model.members.size());
    report.seed = seed;
    report.error_kind = use_nll ? "mixture_nll" : "state_mse";
    report.errors.resize(eval_ds.size());
    for (PenaltyKind k : kinds) report.per_kind[k].penalties.resize(eval_ds.size());

    std::vector<Rng> kind_rngs;
    kind_rngs.reserve(kinds.size());
    for (std::size_t ki = 0; ki < kinds.size(); ++ki)
        kind_rngs.emplace_back(mix_seed(seed, 0xca11 + ki));
    Rng sample_rng(mix_seed(seed, 0x5a3e));

    for (std::size_t j = 0; j < eval_ds.size(); ++j) {
        const Transition& tr = eval_ds.transitions[j];
        const EnsemblePrediction pred = predict(model, tr.state, tr.action);
        if (use_nll) {
            Vec target(tr.next_state);
            target.push_back(tr.reward);
            report.errors[j] = mixture_nll(pred, target);
        } else if (mode == TrueErrorMode::EliteMixtureMean) {
            report.errors[j] = squared_distance(elite_mixture_state_mean(pred, model.d_s), tr.next_state);
        } else {
            const auto elites = model.elite_indices();
            const std::size_t member = elites[sample_rng.index(elites.size())];
            Vec state_mean(pred.members[member].mean.begin(), pred.members[member].mean.begin() + model.d_s);
            report.errors[j] = squared_distance(state_mean, tr.next_state);
        }
        for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
            PenaltyContext ctx;
            ctx.member_selector = &kind_rngs[ki];
            report.per_kind[kinds[ki]].penalties[j] = compute_penalty(kinds[ki], pred, ctx);
        }
    }

    bool errors_constant = true;
    for (double e : report.errors) errors_constant = errors_constant && e == report.errors.front();
    report.degenerate = errors_constant;

    for (auto& [kind, cal] : report.per_kind) {
        bool penalty_constant = true;
        for (double u : cal.penalties) penalty_constant = penalty_constant && u == cal.penalties.front();
        if (!report.degenerate && !penalty_constant && cal.penalties.size() >= 2) {
            cal.spearman = spearman({cal.penalties, report.errors});
            cal.pearson = pearson({cal.penalties, report.errors});
            cal.has_correlations = true;
        }
        if (!penalty_constant && cal.penalties.size() >= 3) {
            cal.skew = skewness(cal.penalties);
            cal.kurtosis = kurtosis(cal.penalties);
            cal.has_shape = true;
        }
    }
    return report;
}

}  // namespace

CalibrationReport transfer_calibration(const EnsembleModel& model, const Dataset& eval_ds,
                                       const std::vector<PenaltyKind>& kinds, std::uint64_t seed,
                                       TrueErrorMode mode) {
    return calibrate(model, eval_ds, kinds, seed, mode, false);
}

CalibrationReport log_likelihood_calibration(const EnsembleModel& model, const Dataset& eval_ds,
                                             const std::vector<PenaltyKind>& kinds, std::uint64_t seed) {
    return calibrate(model, eval_ds, kinds, seed, TrueErrorMode::EliteMixtureMean, true);
}

void replay_rollouts(std::vector<RolloutRecord>& records, const OracleEnv& env, const Dataset& ds) {
    if (ds.meta.env_id != env.spec().env_id)
        throw ValidationError("dataset env " + ds.meta.env_id + " does not match " + env.spec().env_id);
    const auto& bounds = env.spec().state_bounds;

    parallel_for(records.size(), default_workers(), [&](std::size_t r) {
        RolloutRecord& rec = records[r];
        rec.true_mse.assign(rec.steps(), 0.0);
        rec.dist_error.assign(rec.steps(), 0.0);
        for (std::size_t t = 0; t < rec.steps(); ++t) {
            Vec state = rec.states[t];
            for (std::size_t d = 0; d < state.size(); ++d) {
                const double clipped = clip(state[d], bounds[d].first, bounds[d].second);
                if (clipped != state[d]) rec.replay_clipped = true;
                state[d] = clipped;
            }
            const StepResult truth = env.step_from(state, rec.actions[t]);
            rec.true_mse[t] = squared_distance(rec.next_states[t], truth.next_state);

            double best = std::numeric_limits<double>::infinity();
            for (const Transition& tr : ds.transitions) {
                double sq = squared_distance(rec.states[t], tr.state);
                if (sq >= best) continue;  // action term only adds
                sq += squared_distance(rec.actions[t], tr.action);
                best = std::min(best, sq);
            }
            rec.dist_error[t] = std::sqrt(best);
        }
    });
}

OODReport ood_event_report(const std::vector<RolloutRecord>& records, const std::vector<int>& percentiles,
                           const std::vector<PenaltyKind>& kinds) {
    if (records.empty()) throw ValidationError("no rollout records");
    if (percentiles.empty() || kinds.empty()) throw ValidationError("empty percentiles or kinds");

    OODReport report;
    report.percentiles = percentiles;
    report.error_types = {"dynamics", "distribution"};

    std::map<std::string, Vec> errors;
    std::map<PenaltyKind, Vec> raw_scores;
    for (const RolloutRecord& rec : records) {
        if (rec.true_mse.size() != rec.steps() || rec.dist_error.size() != rec.steps())
            throw ValidationError("records are missing replay errors");
        errors["dynamics"].insert(errors["dynamics"].end(), rec.true_mse.begin(), rec.true_mse.end());
        errors["distribution"].insert(errors["distribution"].end(), rec.dist_error.begin(),
                                      rec.dist_error.end());
        for (PenaltyKind k : kinds) {
            const auto it = rec.penalty_traces.find(k);
            if (it == rec.penalty_traces.end())
                throw ValidationError("records lack a trace for " + penalty_kind_name(k));
            raw_scores[k].insert(raw_scores[k].end(), it->second.begin(), it->second.end());
        }
    }
    report.n_steps = errors["dynamics"].size();
    if (report.n_steps < 100) throw ValidationError("need >= 100 labeled steps");

    std::map<PenaltyKind, Vec> scores;
    for (PenaltyKind k : kinds) scores[k] = normalize_penalties(raw_scores[k], NormalizeMode::MinMax01).values;

    for (const std::string& type : report.error_types) {
        const Vec& err = errors[type];
        for (int p : percentiles) {
            const double threshold = quantile_linear(err, static_cast<double>(p) / 100.0);
            std::vector<int> labels(err.size());
            std::size_t n_pos = 0;
            for (std::size_t i = 0; i < err.size(); ++i) {
                labels[i] = err[i] > threshold ? 1 : 0;
                n_pos += labels[i];
            }
            if (n_pos == 0 || n_pos == err.size())
                throw ValidationError("degenerate percentile " + std::to_string(p) + " for " + type);
            report.positives[type][p] = n_pos;
            report.oracle_auc[type][p] = roc_auc(err, labels);
            for (PenaltyKind k : kinds) {
                OODCell cell;
                cell.auc = roc_auc(scores[k], labels);
                cell.ap = average_precision(scores[k], labels);
                cell.pr = pr_curve(scores[k], labels);
                report.cells[type][p][k] = std::move(cell);
            }
        }
    }
    return report;
}

ErrorCurves error_curves(const std::vector<RolloutRecord>& records) {
    if (records.empty()) throw ValidationError("no rollout records");
    const std::size_t horizon = records.front().steps();
    for (const RolloutRecord& rec : records) {
        if (rec.steps() != horizon) throw ValidationError("records must share a horizon");
        if (rec.true_mse.size() != horizon || rec.dist_error.size() != horizon)
            throw ValidationError("records are missing replay errors");
    }

    ErrorCurves curves;
    curves.median_true_mse.resize(horizon);
    curves.median_dist_error.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        Vec dyn(records.size()), dist(records.size());
        for (std::size_t r = 0; r < records.size(); ++r) {
            dyn[r] = records[r].true_mse[t];
            dist[r] = records[r].dist_error[t];
        }
        curves.median_true_mse[t] = median_of(std::move(dyn));
        curves.median_dist_error[t] = median_of(std::move(dist));
    }

    curves.zscore_traces.resize(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (const auto& [kind, trace] : records[r].penalty_traces) {
            bool constant = true;
            for (double u : trace) constant = constant && u == trace.front();
            curves.zscore_traces[r][kind] =
                constant ? Vec{} : normalize_penalties(trace, NormalizeMode::ZScore).values;
        }
    }
    return curves;
}

}  // namespace pessimlab
