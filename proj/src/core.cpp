#include "pessimlab/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pessimlab {

using nlohmann::json;

void EnsemblePrediction::validate() const {
    if (members.empty()) throw ValidationError("ensemble prediction needs >= 1 member");
    if (elite_mask.size() != members.size()) throw ValidationError("elite mask length mismatch");
    bool any_elite = false;
    for (bool e : elite_mask) any_elite = any_elite || e;
    if (!any_elite) throw ValidationError("ensemble prediction needs >= 1 elite");
    const std::size_t d = members.front().mean.size();
    for (const DiagonalGaussian& g : members) {
        if (g.mean.size() != d || g.var.size() != d)
            throw ValidationError("ensemble member dimension mismatch");
        if (!all_finite(g.mean)) throw ValidationError("non-finite member mean");
        for (double v : g.var)
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("member variance must be positive");
    }
}

std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

NormStats compute_norm(const std::vector<Transition>& transitions) {
    if (transitions.empty()) throw ValidationError("empty dataset");
    const std::size_t d_s = transitions.front().state.size();
    const std::size_t d_a = transitions.front().action.size();
    const std::size_t d = d_s + d_a;
    const double n = static_cast<double>(transitions.size());

    NormStats norm;
    norm.input_mean.assign(d, 0.0);
    norm.input_std.assign(d, 0.0);
    for (const Transition& tr : transitions) {
        for (std::size_t i = 0; i < d_s; ++i) norm.input_mean[i] += tr.state[i];
        for (std::size_t i = 0; i < d_a; ++i) norm.input_mean[d_s + i] += tr.action[i];
    }
    for (double& m : norm.input_mean) m /= n;
    for (const Transition& tr : transitions) {
        for (std::size_t i = 0; i < d_s; ++i) {
            const double dlt = tr.state[i] - norm.input_mean[i];
            norm.input_std[i] += dlt * dlt;
        }
        for (std::size_t i = 0; i < d_a; ++i) {
            const double dlt = tr.action[i] - norm.input_mean[d_s + i];
            norm.input_std[d_s + i] += dlt * dlt;
        }
    }
    for (double& s : norm.input_std) s = std::max(std::sqrt(s / n), 1e-8);
    return norm;
}

namespace {

void validate_transitions(const std::vector<Transition>& transitions) {
    if (transitions.empty()) throw ValidationError("empty dataset");
    const std::size_t d_s = transitions.front().state.size();
    const std::size_t d_a = transitions.front().action.size();
    if (d_s == 0 || d_a == 0) throw ValidationError("zero-dimensional transition");
    for (std::size_t k = 0; k < transitions.size(); ++k) {
        const Transition& tr = transitions[k];
        if (tr.state.size() != d_s || tr.next_state.size() != d_s || tr.action.size() != d_a)
            throw ValidationError("dimension mismatch at row " + std::to_string(k));
        if (!all_finite(tr.state) || !all_finite(tr.action) || !all_finite(tr.next_state) ||
            !std::isfinite(tr.reward))
            throw ValidationError("non-finite value at row " + std::to_string(k));
    }
}

json norm_to_json(const NormStats& norm) {
    return json{{"input_mean", norm.input_mean}, {"input_std", norm.input_std}};
}

}  // namespace

Dataset make_dataset(std::vector<Transition> transitions, DatasetMeta meta) {
    validate_transitions(transitions);
    Dataset ds;
    ds.norm = compute_norm(transitions);
    ds.transitions = std::move(transitions);
    ds.meta = std::move(meta);
    ds.meta.size = ds.transitions.size();
    return ds;
}

void dataset_write(const Dataset& ds, const std::string& path) {
    validate_transitions(ds.transitions);
    if (ds.meta.size != ds.transitions.size()) throw ValidationError("meta size mismatch");
    const std::size_t d_s = ds.state_dim();
    const std::size_t d_a = ds.action_dim();

    std::ofstream csv(path + ".csv");
    if (!csv) throw std::runtime_error("cannot open for write: " + path + ".csv");
    for (std::size_t i = 0; i < d_s; ++i) csv << "s_" << i << ",";
    for (std::size_t i = 0; i < d_a; ++i) csv << "a_" << i << ",";
    csv << "r,";
    for (std::size_t i = 0; i < d_s; ++i) csv << "sn_" << i << ",";
    csv << "terminal\n";
    for (const Transition& tr : ds.transitions) {
        for (double v : tr.state) csv << format_g17(v) << ",";
        for (double v : tr.action) csv << format_g17(v) << ",";
        csv << format_g17(tr.reward) << ",";
        for (double v : tr.next_state) csv << format_g17(v) << ",";
        csv << (tr.terminal ? 1 : 0) << "\n";
    }
    if (!csv.good()) throw std::runtime_error("write failed: " + path + ".csv");
    csv.close();

    json meta{{"env_id", ds.meta.env_id},
              {"tier", ds.meta.tier},
              {"seed", ds.meta.seed},
              {"size", ds.meta.size},
              {"norm", norm_to_json(ds.norm)}};
    if (!ds.meta.behavior_policies.empty()) meta["behavior_policies"] = ds.meta.behavior_policies;
    if (ds.meta.has_mean_episode_return) meta["mean_episode_return"] = ds.meta.mean_episode_return;
    if (ds.meta.has_references) {
        meta["reference_returns"] = {{"random", ds.meta.reference_random},
                                     {"expert", ds.meta.reference_expert}};
    }
    std::ofstream mf(path + ".meta.json");
    if (!mf) throw std::runtime_error("cannot open for write: " + path + ".meta.json");
    mf << meta.dump(2) << "\n";
    if (!mf.good()) throw std::runtime_error("write failed: " + path + ".meta.json");
}

namespace {

double parse_double(const std::string& field, std::size_t row) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
        throw ValidationError("malformed row " + std::to_string(row));
    return v;
}

}  // namespace

Dataset dataset_read(const std::string& path) {
    std::ifstream mf(path + ".meta.json");
    if (!mf) throw ValidationError("missing file: " + path + ".meta.json");
    json meta = json::parse(mf, nullptr, /*allow_exceptions=*/false);
    if (meta.is_discarded()) throw ValidationError("malformed meta json: " + path);

    Dataset ds;
    ds.meta.env_id = meta.at("env_id").get<std::string>();
    ds.meta.tier = meta.at("tier").get<std::string>();
    ds.meta.seed = meta.at("seed").get<std::uint64_t>();
    ds.meta.size = meta.at("size").get<std::size_t>();
    if (meta.contains("behavior_policies"))
        ds.meta.behavior_policies = meta["behavior_policies"].get<std::vector<std::string>>();
    if (meta.contains("mean_episode_return")) {
        ds.meta.mean_episode_return = meta["mean_episode_return"].get<double>();
        ds.meta.has_mean_episode_return = true;
    }
    if (meta.contains("reference_returns")) {
        ds.meta.reference_random = meta["reference_returns"].at("random").get<double>();
        ds.meta.reference_expert = meta["reference_returns"].at("expert").get<double>();
        ds.meta.has_references = true;
    }
    NormStats stored;
    stored.input_mean = meta.at("norm").at("input_mean").get<Vec>();
    stored.input_std = meta.at("norm").at("input_std").get<Vec>();

    std::ifstream csv(path + ".csv");
    if (!csv) throw ValidationError("missing file: " + path + ".csv");
    std::string header;
    if (!std::getline(csv, header)) throw ValidationError("empty csv: " + path);
    std::size_t d_s = 0, d_a = 0;
    {
        std::stringstream hs(header);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (col.rfind("s_", 0) == 0 && col.rfind("sn_", 0) != 0) ++d_s;
            if (col.rfind("a_", 0) == 0) ++d_a;
        }
        if (d_s == 0 || d_a == 0) throw ValidationError("malformed csv header: " + path);
    }
    const std::size_t expected_cols = 2 * d_s + d_a + 2;

    std::string line;
    std::size_t row = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != expected_cols) throw ValidationError("malformed row " + std::to_string(row));
        Transition tr;
        std::size_t c = 0;
        tr.state.resize(d_s);
        for (std::size_t i = 0; i < d_s; ++i) tr.state[i] = parse_double(fields[c++], row);
        tr.action.resize(d_a);
        for (std::size_t i = 0; i < d_a; ++i) tr.action[i] = parse_double(fields[c++], row);
        tr.reward = parse_double(fields[c++], row);
        tr.next_state.resize(d_s);
        for (std::size_t i = 0; i < d_s; ++i) tr.next_state[i] = parse_double(fields[c++], row);
        tr.terminal = fields[c] == "1";
        if (!all_finite(tr.state) || !all_finite(tr.action) || !all_finite(tr.next_state) ||
            !std::isfinite(tr.reward))
            throw ValidationError("non-finite value at row " + std::to_string(row));
        ds.transitions.push_back(std::move(tr));
        ++row;
    }
    if (ds.transitions.empty()) throw ValidationError("empty dataset");
    if (ds.meta.size != ds.transitions.size())
        throw ValidationError("meta size " + std::to_string(ds.meta.size) + " != row count " +
                              std::to_string(ds.transitions.size()));

    const NormStats recomputed = compute_norm(ds.transitions);
    if (stored.input_mean.size() != recomputed.input_mean.size())
        throw ValidationError("norm dimension mismatch");
    for (std::size_t i = 0; i < recomputed.input_mean.size(); ++i) {
        if (std::fabs(stored.input_mean[i] - recomputed.input_mean[i]) > 1e-8 ||
            std::fabs(stored.input_std[i] - recomputed.input_std[i]) > 1e-8)
            throw ValidationError("stored norm deviates from recomputation");
    }
    ds.norm = stored;
    return ds;
}

Vec normalize_input(const NormStats& norm, const Vec& state, const Vec& action) {
    if (state.size() + action.size() != norm.input_mean.size())
        throw ValidationError("dimension mismatch in normalize_input");
    Vec out(norm.input_mean.size());
    for (std::size_t i = 0; i < state.size(); ++i)
        out[i] = (state[i] - norm.input_mean[i]) / norm.input_std[i];
    for (std::size_t i = 0; i < action.size(); ++i) {
        const std::size_t j = state.size() + i;
        out[j] = (action[i] - norm.input_mean[j]) / norm.input_std[j];
    }
    return out;
}

Vec normalize_input(const Dataset& ds, const Vec& state, const Vec& action) {
    return normalize_input(ds.norm, state, action);
}

}  // namespace pessimlab
