#include "pessimlab/penalty.hpp"

#include <cmath>

namespace pessimlab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::string kind_names[] = {"max_aleatoric", "max_pairwise_diff", "ll_var",
                            "loo_kl",        "ensemble_std",      "ensemble_var"};

// Members participating in the penalty, truncated to the selected dims.
std::vector<DiagonalGaussian> select_members(const EnsemblePrediction& pred, const PenaltyContext& ctx) {
    pred.validate();
    const std::size_t dims = ctx.dims_used == PenaltyDims::StateOnly ? pred.dim() - 1 : pred.dim();
    if (dims == 0) throw ValidationError("state_only penalty needs >= 2 output dims");
    std::vector<DiagonalGaussian> members;
    for (std::size_t i = 0; i < pred.members.size(); ++i) {
        if (!ctx.use_all_members && !pred.elite_mask[i]) continue;
        DiagonalGaussian g;
        g.mean.assign(pred.members[i].mean.begin(), pred.members[i].mean.begin() + dims);
        g.var.assign(pred.members[i].var.begin(), pred.members[i].var.begin() + dims);
        members.push_back(std::move(g));
    }
    if (members.empty()) throw ValidationError("no members selected for penalty");
    return members;
}

MixtureMoments moments_of(const std::vector<DiagonalGaussian>& members) {
    const std::size_t d = members.front().mean.size();
    const double n = static_cast<double>(members.size());
    bool identical = true;
    for (const auto& g : members)
        identical = identical && g.mean == members.front().mean && g.var == members.front().var;
    if (identical) return {members.front().mean, members.front().var};
    MixtureMoments mm;
    mm.mean.assign(d, 0.0);
    mm.var.assign(d, 0.0);
    for (const auto& g : members)
        for (std::size_t i = 0; i < d; ++i) mm.mean[i] += g.mean[i];
    for (double& m : mm.mean) m /= n;
    for (const auto& g : members)
        for (std::size_t i = 0; i < d; ++i) mm.var[i] += g.var[i] + g.mean[i] * g.mean[i];
    for (std::size_t i = 0; i < d; ++i) {
        mm.var[i] = mm.var[i] / n - mm.mean[i] * mm.mean[i];
        if (mm.var[i] < 0.0) mm.var[i] = 0.0;  // absorbs rounding at the 1e-12 scale
    }
    return mm;
}

std::size_t choose_member(std::size_t n, PenaltyContext& ctx) {
    if (ctx.fixed_member >= 0) {
        if (static_cast<std::size_t>(ctx.fixed_member) >= n)
            throw ValidationError("fixed_member out of range");
        return static_cast<std::size_t>(ctx.fixed_member);
    }
    if (ctx.member_selector == nullptr)
        throw ValidationError("penalty needs a member_selector rng");
    return ctx.member_selector->index(n);
}

double log_density(const DiagonalGaussian& g, const Vec& x) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - g.mean[i];
        ll += -0.5 * (kLog2Pi + std::log(g.var[i]) + r * r / g.var[i]);
    }
    return ll;
}

double max_aleatoric(const std::vector<DiagonalGaussian>& members, bool use_std) {
    double best = 0.0;
    for (const auto& g : members) {
        double sq = 0.0;
        for (double v : g.var) sq += use_std ? v : v * v;
        best = std::max(best, std::sqrt(sq));
    }
    return best;
}

double max_pairwise_diff(const std::vector<DiagonalGaussian>& members) {
    double best = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
            best = std::max(best, std::sqrt(squared_distance(members[i].mean, members[j].mean)));
    return best;
}

double ll_var(const std::vector<DiagonalGaussian>& members, PenaltyContext& ctx) {
    if (members.size() == 1) return 0.0;  // population variance of one value
    const std::size_t pick = choose_member(members.size(), ctx);
    Vec x(members[pick].mean.size());
    if (ctx.member_selector == nullptr && ctx.fixed_member >= 0) {
        // Pinned-member mode without an rng: use the member mean as the draw.
        x = members[pick].mean;
    } else {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = members[pick].mean[i] + std::sqrt(members[pick].var[i]) * ctx.member_selector->normal();
    }
    Vec lls(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) lls[i] = log_density(members[i], x);
    const double m = mean_of(lls);
    double var = 0.0;
    for (double ll : lls) var += (ll - m) * (ll - m);
    return var / static_cast<double>(lls.size());
}

double loo_kl(const std::vector<DiagonalGaussian>& members, PenaltyContext& ctx) {
    if (members.size() < 2) throw ValidationError("loo_kl needs >= 2 members");
    const std::size_t pick = choose_member(members.size(), ctx);
    std::vector<DiagonalGaussian> rest;
    rest.reserve(members.size() - 1);
    for (std::size_t i = 0; i < members.size(); ++i)
        if (i != pick) rest.push_back(members[i]);
    const MixtureMoments mm = moments_of(rest);
    DiagonalGaussian aggregate{mm.mean, mm.var};
    for (double& v : aggregate.var) v = std::max(v, 1e-300);  // moment matching can hit exact zero
    return gaussian_kl(members[pick], aggregate);
}

}  // namespace

std::string penalty_kind_name(PenaltyKind kind) { return kind_names[static_cast<int>(kind)]; }

PenaltyKind penalty_kind_from_name(const std::string& s) {
    for (int i = 0; i < 6; ++i)
        if (kind_names[i] == s) return static_cast<PenaltyKind>(i);
    throw ValidationError("unknown penalty kind: " + s);
}

MixtureMoments mixture_moments(const EnsemblePrediction& pred) {
    pred.validate();
    return moments_of(pred.members);
}

double gaussian_kl(const DiagonalGaussian& p, const DiagonalGaussian& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.mean.size(); ++i) {
        const double dm = p.mean[i] - q.mean[i];
        kl += 0.5 * std::log(q.var[i] / p.var[i]) + (p.var[i] + dm * dm) / (2.0 * q.var[i]) - 0.5;
    }
    return kl;
}

double compute_penalty(PenaltyKind kind, const EnsemblePrediction& pred, PenaltyContext& ctx) {
    const auto members = select_members(pred, ctx);
    switch (kind) {
        case PenaltyKind::MaxAleatoric: return max_aleatoric(members, ctx.aleatoric_use_std);
        case PenaltyKind::MaxPairwiseDiff: return max_pairwise_diff(members);
        case PenaltyKind::LLVar: return ll_var(members, ctx);
        case PenaltyKind::LOOKL: return loo_kl(members, ctx);
        case PenaltyKind::EnsembleStd: {
            MixtureMoments mm = moments_of(members);
            for (double& v : mm.var) v = std::sqrt(v);
            return l2_norm(mm.var);
        }
        case PenaltyKind::EnsembleVar: return l2_norm(moments_of(members).var);
    }
    throw ValidationError("unknown penalty kind");
}

NormalizeResult normalize_penalties(const Vec& values, NormalizeMode mode) {
    if (values.empty()) throw ValidationError("normalize_penalties needs values");
    if (!all_finite(values)) throw ValidationError("non-finite penalty value");
    NormalizeResult out;
    out.values.resize(values.size());
    if (mode == NormalizeMode::MinMax01) {
        const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
        const double lo = *lo_it, hi = *hi_it;
        if (hi == lo) {
            out.degenerate = true;
            std::fill(out.values.begin(), out.values.end(), 0.0);
            return out;
        }
        for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = (values[i] - lo) / (hi - lo);
        return out;
    }
    const double m = mean_of(values);
    double var = 0.0;
    for (double v : values) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / static_cast<double>(values.size()));
    if (sd == 0.0) throw ValidationError("zscore of constant values");
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = (values[i] - m) / sd;
    return out;
}

}  // namespace pessimlab
