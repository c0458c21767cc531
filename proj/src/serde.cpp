#include "pessimlab/serde.hpp"

#include <fstream>
#include <sstream>

namespace pessimlab {

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& context) {
    if (!obj.is_object()) throw ValidationError("expected an object for " + context);
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError("unknown key '" + key + "' in " + context);
    }
}

namespace {

std::ofstream open_out(const std::string& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open for write: " + file);
    return out;
}

void write_json_file(const json& j, const std::string& file) {
    auto out = open_out(file);
    out << j.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("write failed: " + file);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

double to_double(const std::string& s, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ValidationError("malformed number in " + context);
    return v;
}

}  // namespace

void rollouts_write(const RolloutFile& file, const std::string& path) {
    auto csv = open_out(path + ".csv");
    csv << "record,t,start_index,lambda,truncated,replay_clipped,member";
    for (std::size_t d = 0; d < file.d_s; ++d) csv << ",s_" << d;
    for (std::size_t d = 0; d < file.d_a; ++d) csv << ",a_" << d;
    csv << ",r_model,penalty,r_pen";
    for (std::size_t d = 0; d < file.d_s; ++d) csv << ",sn_" << d;
    for (PenaltyKind k : kAllPenaltyKinds) csv << ",u_" << penalty_kind_name(k);
    if (file.has_errors) csv << ",true_mse,dist_error";
    csv << "\n";

    for (std::size_t r = 0; r < file.records.size(); ++r) {
        const RolloutRecord& rec = file.records[r];
        for (std::size_t t = 0; t < rec.steps(); ++t) {
            csv << r << "," << t << "," << rec.start_index << "," << format_g17(rec.lambda) << ","
                << (rec.truncated ? 1 : 0) << "," << (rec.replay_clipped ? 1 : 0) << ","
                << rec.member_indices[t];
            for (double v : rec.states[t]) csv << "," << format_g17(v);
            for (double v : rec.actions[t]) csv << "," << format_g17(v);
            csv << "," << format_g17(rec.model_rewards[t]) << "," << format_g17(rec.penalties[t]) << ","
                << format_g17(rec.penalized_rewards[t]);
            for (double v : rec.next_states[t]) csv << "," << format_g17(v);
            for (PenaltyKind k : kAllPenaltyKinds) {
                const auto it = rec.penalty_traces.find(k);
                csv << "," << format_g17(it == rec.penalty_traces.end() ? 0.0 : it->second[t]);
            }
            if (file.has_errors)
                csv << "," << format_g17(rec.true_mse[t]) << "," << format_g17(rec.dist_error[t]);
            csv << "\n";
        }
    }
    if (!csv.good()) throw std::runtime_error("write failed: " + path + ".csv");
    csv.close();

    write_json_file(json{{"format", "pessimlab-rollouts-v1"},
                         {"env_id", file.env_id},
                         {"d_s", file.d_s},
                         {"d_a", file.d_a},
                         {"count", file.records.size()},
                         {"penalty_kind", penalty_kind_name(file.penalty_kind)},
                         {"has_errors", file.has_errors}},
                    path + ".meta.json");
}

RolloutFile rollouts_read(const std::string& path) {
    std::ifstream mf(path + ".meta.json");
    if (!mf) throw ValidationError("missing file: " + path + ".meta.json");
    json meta = json::parse(mf, nullptr, false);
    if (meta.is_discarded() || meta.value("format", "") != "pessimlab-rollouts-v1")
        throw ValidationError("not a rollouts file: " + path);

    RolloutFile file;
    file.env_id = meta.at("env_id").get<std::string>();
    file.d_s = meta.at("d_s").get<std::size_t>();
    file.d_a = meta.at("d_a").get<std::size_t>();
    file.penalty_kind = penalty_kind_from_name(meta.at("penalty_kind").get<std::string>());
    file.has_errors = meta.at("has_errors").get<bool>();
    const std::size_t count = meta.at("count").get<std::size_t>();
    file.records.resize(count);

    std::ifstream csv(path + ".csv");
    if (!csv) throw ValidationError("missing file: " + path + ".csv");
    std::string line;
    std::getline(csv, line);  // header
    const std::size_t expected =
        7 + 2 * file.d_s + file.d_a + 3 + 6 + (file.has_errors ? 2 : 0);
    std::size_t row = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != expected)
            throw ValidationError("malformed rollout row " + std::to_string(row));
        std::size_t c = 0;
        const std::string context = "rollout row " + std::to_string(row);
        const std::size_t rec_id = static_cast<std::size_t>(to_double(fields[c++], context));
        if (rec_id >= count) throw ValidationError("record id out of range in " + context);
        RolloutRecord& rec = file.records[rec_id];
        c++;  // t: implicit by order
        rec.start_index = static_cast<std::size_t>(to_double(fields[c++], context));
        rec.lambda = to_double(fields[c++], context);
        rec.truncated = fields[c++] == "1";
        rec.replay_clipped = fields[c++] == "1";
        rec.member_indices.push_back(static_cast<int>(to_double(fields[c++], context)));
        Vec state(file.d_s), action(file.d_a), next(file.d_s);
        for (double& v : state) v = to_double(fields[c++], context);
        for (double& v : action) v = to_double(fields[c++], context);
        rec.states.push_back(std::move(state));
        rec.actions.push_back(std::move(action));
        rec.model_rewards.push_back(to_double(fields[c++], context));
        rec.penalties.push_back(to_double(fields[c++], context));
        rec.penalized_rewards.push_back(to_double(fields[c++], context));
        for (double& v : next) v = to_double(fields[c++], context);
        rec.next_states.push_back(std::move(next));
        for (PenaltyKind k : kAllPenaltyKinds)
            rec.penalty_traces[k].push_back(to_double(fields[c++], context));
        if (file.has_errors) {
            rec.true_mse.push_back(to_double(fields[c++], context));
            rec.dist_error.push_back(to_double(fields[c++], context));
        }
        ++row;
    }
    return file;
}

json calibration_to_json(const CalibrationReport& report, bool in_distribution) {
    json per_kind = json::object();
    for (const auto& [kind, cal] : report.per_kind) {
        json entry{{"has_correlations", cal.has_correlations}, {"has_shape", cal.has_shape}};
        if (cal.has_correlations) {
            entry["spearman"] = cal.spearman;
            entry["pearson"] = cal.pearson;
        }
        if (cal.has_shape) {
            entry["skew"] = cal.skew;
            entry["kurtosis"] = cal.kurtosis;
        }
        per_kind[penalty_kind_name(kind)] = std::move(entry);
    }
    json j{{"format", "pessimlab-calibration-v1"},
           {"env_id", report.env_id},
           {"train_tier", report.train_tier},
           {"eval_tier", report.eval_tier},
           {"n_models", report.n_models},
           {"seed", report.seed},
           {"error_kind", report.error_kind},
           {"n_pairs", report.errors.size()},
           {"in_distribution", in_distribution},
           {"per_kind", std::move(per_kind)}};
    if (report.degenerate) j["degenerate"] = "zero-variance errors";
    return j;
}

void calibration_pairs_csv(const CalibrationReport& report, const std::string& file) {
    auto csv = open_out(file);
    csv << "index,error";
    for (const auto& [kind, cal] : report.per_kind) csv << ",u_" << penalty_kind_name(kind);
    csv << "\n";
    for (std::size_t i = 0; i < report.errors.size(); ++i) {
        csv << i << "," << format_g17(report.errors[i]);
        for (const auto& [kind, cal] : report.per_kind) csv << "," << format_g17(cal.penalties[i]);
        csv << "\n";
    }
    if (!csv.good()) throw std::runtime_error("write failed: " + file);
}

json ood_to_json(const OODReport& report) {
    json cells = json::object();
    for (const auto& [type, by_percentile] : report.cells) {
        json per_type = json::object();
        for (const auto& [p, by_kind] : by_percentile) {
            json per_p = json::object();
            for (const auto& [kind, cell] : by_kind)
                per_p[penalty_kind_name(kind)] = json{{"auc", cell.auc}, {"ap", cell.ap}};
            per_p["oracle_auc"] = report.oracle_auc.at(type).at(p);
            per_p["positives"] = report.positives.at(type).at(p);
            per_type[std::to_string(p)] = std::move(per_p);
        }
        cells[type] = std::move(per_type);
    }
    return json{{"format", "pessimlab-ood-v1"},
                {"n_steps", report.n_steps},
                {"percentiles", report.percentiles},
                {"cells", std::move(cells)}};
}

void ood_pr_csv(const OODReport& report, const std::string& file) {
    auto csv = open_out(file);
    csv << "error_type,percentile,penalty,recall,precision\n";
    for (const auto& [type, by_percentile] : report.cells)
        for (const auto& [p, by_kind] : by_percentile)
            for (const auto& [kind, cell] : by_kind)
                for (const PrPoint& point : cell.pr)
                    csv << type << "," << p << "," << penalty_kind_name(kind) << ","
                        << format_g17(point.recall) << "," << format_g17(point.precision) << "\n";
    if (!csv.good()) throw std::runtime_error("write failed: " + file);
}

void error_curves_csv(const ErrorCurves& curves, const std::string& file) {
    auto csv = open_out(file);
    csv << "t,median_true_mse,median_dist_error\n";
    for (std::size_t t = 0; t < curves.median_true_mse.size(); ++t)
        csv << t << "," << format_g17(curves.median_true_mse[t]) << ","
            << format_g17(curves.median_dist_error[t]) << "\n";
    if (!csv.good()) throw std::runtime_error("write failed: " + file);
}

json trial_to_json(const Trial& trial, bool include_wall_time) {
    json j{{"config",
            {{"penalty", penalty_kind_name(trial.config.penalty)},
             {"auto_lambda", trial.config.auto_lambda},
             {"lambda", trial.config.lambda},
             {"horizon", trial.config.horizon},
             {"n_models", trial.config.n_models}}},
           {"seed", trial.seed},
           {"status", trial.status},
           {"iteration_scores", trial.iteration_scores},
           {"lambda_history", trial.lambda_history}};
    if (trial.has_objective) j["objective"] = trial.objective;
    if (!trial.error.empty()) j["error"] = trial.error;
    if (include_wall_time) j["wall_time_s"] = trial.wall_time_s;
    return j;
}

namespace {

json ci_to_json(const CiEstimate& ci) {
    return json{{"point", ci.point}, {"lo", ci.lo}, {"hi", ci.hi}, {"level", ci.level}};
}

}  // namespace

json aggregate_to_json(const AggregateReport& report) {
    json tasks = json::array();
    for (const TaskScores& t : report.tasks)
        tasks.push_back(json{{"task", t.task}, {"candidate", t.candidate}, {"baseline", t.baseline}});
    return json{{"format", "pessimlab-aggregate-v1"},
                {"tasks", std::move(tasks)},
                {"candidate", {{"mean", ci_to_json(report.candidate_mean)},
                               {"median", ci_to_json(report.candidate_median)},
                               {"iqm", ci_to_json(report.candidate_iqm)}}},
                {"baseline", {{"mean", ci_to_json(report.baseline_mean)}}},
                {"probability_of_improvement", report.probability_of_improvement},
                {"per_env_candidate_mean", report.per_env_candidate_mean},
                {"per_env_baseline_mean", report.per_env_baseline_mean}};
}

json model_config_to_json(const ModelConfig& cfg) {
    return json{{"n_total", cfg.n_total},
                {"n_elite", cfg.n_elite},
                {"hidden_sizes", cfg.hidden_sizes},
                {"learning_rate", cfg.learning_rate},
                {"weight_decay", cfg.weight_decay},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"logvar_min", cfg.logvar_min},
                {"logvar_max", cfg.logvar_max},
                {"validation_fraction", cfg.validation_fraction},
                {"seed", cfg.seed}};
}

ModelConfig model_config_from_json(const json& j, std::uint64_t seed) {
    require_keys(j,
                 {"n_total", "n_elite", "hidden_sizes", "learning_rate", "weight_decay", "epochs",
                  "batch_size", "logvar_min", "logvar_max", "validation_fraction"},
                 "model config");
    ModelConfig cfg;
    cfg.n_total = j.value("n_total", cfg.n_total);
    cfg.n_elite = j.value("n_elite", cfg.n_elite);
    cfg.hidden_sizes = j.value("hidden_sizes", cfg.hidden_sizes);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.logvar_min = j.value("logvar_min", cfg.logvar_min);
    cfg.logvar_max = j.value("logvar_max", cfg.logvar_max);
    cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

}  // namespace pessimlab
