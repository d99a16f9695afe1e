#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pda/data.hpp"
#include "pda/trainer.hpp"

// Serialization of run artifacts: intervals.jsonl, m-trace.csv, summary
// and ablation tables.

namespace pda {

nlohmann::json to_json(const LossBreakdown& b);
nlohmann::json to_json(const IntervalRecord& r);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const SyntheticConfig& cfg);
nlohmann::json to_json(const GradCheckReport& r);
nlohmann::json to_json(const AblationTable& t);

/// Overrides fields of `cfg` present in `j` (same keys as to_json).
void apply_json(const nlohmann::json& j, TrainConfig& cfg);
void apply_json(const nlohmann::json& j, SyntheticConfig& cfg);

/// One JSON object per line.
std::string intervals_jsonl(const RunRecord& record);
/// Header "iteration,w_0,...,w_{C-1}" then one line per interval.
std::string class_weight_trace_csv(const RunRecord& record);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace pda
