#pragma once

#include <json.hpp>

#include "pessimlab/protocols.hpp"
#include "pessimlab/search.hpp"

namespace pessimlab {

using json = nlohmann::json;

// Rejects config objects carrying keys outside the allowed set.
void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& context);

struct RolloutFile {
    std::vector<RolloutRecord> records;
    std::string env_id;
    std::size_t d_s = 0;
    std::size_t d_a = 0;
    PenaltyKind penalty_kind = PenaltyKind::EnsembleStd;
    bool has_errors = false;
};

// CSV (one row per step, 17-significant-digit floats) + JSON sidecar.
void rollouts_write(const RolloutFile& file, const std::string& path);
RolloutFile rollouts_read(const std::string& path);

json calibration_to_json(const CalibrationReport& report, bool in_distribution);
void calibration_pairs_csv(const CalibrationReport& report, const std::string& file);

json ood_to_json(const OODReport& report);
void ood_pr_csv(const OODReport& report, const std::string& file);

void error_curves_csv(const ErrorCurves& curves, const std::string& file);

json trial_to_json(const Trial& trial, bool include_wall_time);
json aggregate_to_json(const AggregateReport& report);

json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const json& j, std::uint64_t seed);

}  // namespace pessimlab
