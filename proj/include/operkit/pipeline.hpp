#pragma once

#include "operkit/extraction.hpp"
#include "operkit/ingest.hpp"
#include "operkit/kinematics.hpp"
#include "operkit/lognormal.hpp"
#include "operkit/metrics.hpp"
#include "operkit/rhythm.hpp"
#include "operkit/stats.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace operkit::pipeline {

struct PipelineConfig {
    kinematics::FilterSpec filter;
    extraction::ExtractionConfig extraction;
    ingest::WindowSchedule schedule;
    rhythm::Photoperiod photoperiod{7 * 60, 19 * 60};
    metrics::MetricsConfig metrics;
    double period_h = 24.0;
    unsigned threads = 0;
    std::filesystem::path output_dir = "out";

    void validate() const;
};

/// Keys mirror the struct; absent keys keep their defaults, unknown keys
/// are rejected. Throws InputError on malformed JSON.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_json(const PipelineConfig& cfg);

// ---- decompose ----

enum class DecomposeTarget { operculum, body };

DecomposeTarget parse_decompose_target(std::string_view name);

struct DecomposeOptions {
    DecomposeTarget target = DecomposeTarget::operculum;
    // Without detrending the axis integral is decomposed as-is; meant for
    // short clean captures that start and end at rest.
    bool detrend = true;
};

struct DecomposeOutput {
    extraction::ExtractionResult result;
    std::vector<lognormal::MovementFeatures> features;
    std::optional<lognormal::FeatureSummary> summary;
};

kinematics::VelocityTrace velocity_trace(const ingest::Recording& rec, const PipelineConfig& cfg,
                                         const DecomposeOptions& options);

DecomposeOutput run_decompose(const ingest::Recording& rec, const PipelineConfig& cfg,
                              const DecomposeOptions& options = {});

// ---- monitor ----

/// One summary per complete window, in window order.
std::vector<metrics::WindowSummary> run_monitor(const ingest::Recording& rec, const PipelineConfig& cfg);

// ---- rhythm ----

struct SubjectWindows {
    std::string subject;
    std::vector<metrics::WindowSummary> rows;
};

struct FitRow {
    std::string subject;
    rhythm::Metric metric = rhythm::Metric::activity;
    rhythm::RhythmFit fit;
};

struct CouplingRow {
    std::string subject;
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

struct RhythmReport {
    std::string group;
    std::vector<FitRow> fits;      // per subject, activity then respiration
    std::vector<FitRow> consensus; // activity then respiration
    std::vector<CouplingRow> coupling;
    rhythm::DailyProfile activity_profile;
    rhythm::DailyProfile respiration_profile;
    std::vector<std::string> warnings;
};

/// Per-metric series of one subject; flagged windows are left out
/// (clipped ones for both metrics, zero-signal ones for respiration).
rhythm::MetricSeries series_from_windows(const SubjectWindows& subject, rhythm::Metric metric);

RhythmReport run_rhythm(std::span<const SubjectWindows> subjects, const PipelineConfig& cfg, std::string group);

// ---- compare ----

struct ComparisonRow {
    std::string metric;
    std::string group_a;
    std::string group_b;
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;

    bool operator==(const ComparisonRow&) const = default;
};

/// Mann-Whitney and t tests of the per-subject mesors for each metric, plus
/// Pearson rows of body weight against each metric when `weights` covers at
/// least three subjects of a group.
std::vector<ComparisonRow> run_compare(const RhythmReport& a, const RhythmReport& b,
                                       const std::map<std::string, double>* weights,
                                       std::vector<std::string>* warnings = nullptr);

} // namespace operkit::pipeline
