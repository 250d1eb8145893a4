#pragma once

#include "operkit/extraction.hpp"
#include "operkit/lognormal.hpp"
#include "operkit/metrics.hpp"
#include "operkit/pipeline.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace operkit::report {

std::string read_text_file(const std::filesystem::path& path);
// Writes via a temporary sibling and renames, so readers never see a
// partial file. Throws InputError on I/O failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// {"group", "fits":[{subject, metric, mesor, amplitude, acrophase_hhmm,
/// acrophase_rad, rss, p_value, n}], "consensus":[...], "coupling":[...],
/// "warnings":[...]}
std::string rhythm_report_json(const pipeline::RhythmReport& report);
/// Restores group, fits, consensus, coupling and warnings (profiles live in
/// their own CSV files).
pipeline::RhythmReport parse_rhythm_report(std::string_view json_text);

inline constexpr std::string_view kComparisonCsvHeader = "metric,group_a,group_b,method,statistic,p_value";
std::string comparison_csv(const std::vector<pipeline::ComparisonRow>& rows);
std::vector<pipeline::ComparisonRow> parse_comparison_csv(std::string_view text);

/// "subject,body_weight_g"
std::map<std::string, double> parse_weights_csv(std::string_view text);

struct ResultBundle {
    std::vector<metrics::WindowSummary> windows;
    std::optional<pipeline::RhythmReport> rhythm;
    std::vector<pipeline::ComparisonRow> comparison;
    std::optional<extraction::ExtractionResult> extraction;
    std::vector<lognormal::LabeledSummary> feature_groups;
};

/// Writes windows.csv, comparison.csv, components.csv and features.csv
/// (headers only when empty), plus rhythm_report.json,
/// profile_activity.csv, profile_respiration.csv and extraction.json when
/// present. Output is byte-identical for identical bundles.
void persist_results(const ResultBundle& bundle, const std::filesystem::path& dir);

} // namespace operkit::report
