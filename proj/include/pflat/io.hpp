#pragma once

#include "pflat/canonical_json.hpp"
#include "pflat/evaluation.hpp"
#include "pflat/flat_prefix.hpp"
#include "pflat/metrics.hpp"
#include "pflat/prompt.hpp"
#include "pflat/selection.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pflat {

/// {"label": "token", ...}. Throws IoError, ParseError, InvalidConfig.
Verbalizer load_verbalizer(const std::filesystem::path& path);

/// JSON Lines, one {"text": ..., "label": ... | null} per line; blank lines
/// are skipped. Labels are checked against `verbalizer` when given. Throws
/// IoError, ParseError, EmptyText, UnknownLabel, each citing the line.
LabeledSet load_dataset(const std::filesystem::path& path, const Verbalizer* verbalizer = nullptr);

/// {"prompts": [{"id", "instruction", "demos": [{"text", "label"}]}]}.
/// Throws IoError, ParseError, DuplicateId, UnknownLabel.
PromptPool load_prompt_pool(const std::filesystem::path& path, const Verbalizer& verbalizer);

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const StudyConfig& config);
nlohmann::json to_json(const EvaluationReport& report);
nlohmann::json to_json(const SweepResult& result);
nlohmann::json to_json(const AlphaTuning& tuning);
nlohmann::json to_json(const PrefixTuneResult& result);
nlohmann::json to_json(const std::vector<MetricReport>& reports);

/// Inverse of to_json; throws ParseError.
MetricReport metric_report_from_json(const nlohmann::json& j);
StudyConfig study_config_from_json(const nlohmann::json& j);
EvaluationReport evaluation_report_from_json(const nlohmann::json& j);

/// Flat CSV view: a header row and one row per prompt (or sweep cell).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table to_table(const std::vector<MetricReport>& reports);
Table to_table(const EvaluationReport& report);
Table to_table(const SweepResult& result);
Table to_table(const AlphaTuning& tuning);
Table to_table(const PrefixTuneResult& result);

std::string to_csv(const Table& table);

enum class ReportFormat { json, csv };
ReportFormat parse_report_format(std::string_view name);

/// Writes through a temporary file and a rename so a failed write leaves no
/// partial output. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

template <typename Report>
std::string render_report(const Report& report, ReportFormat format) {
  return format == ReportFormat::json ? canonical_dump(to_json(report)) + "\n" : to_csv(to_table(report));
}

template <typename Report>
void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format) {
  write_text_file(path, render_report(report, format));
}

}  // namespace pflat
