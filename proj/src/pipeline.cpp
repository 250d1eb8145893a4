#include "operkit/pipeline.hpp"

#include "operkit/error.hpp"
#include "operkit/parallel.hpp"
#include "operkit/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace operkit::pipeline {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where)
{
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw InputError("unknown config key '" + std::string(where) + key + "'");
        }
    }
}

template <typename T>
void read_key(const json& obj, const char* key, T& target)
{
    if (obj.contains(key)) {
        try {
            target = obj.at(key).get<T>();
        } catch (const json::exception& e) {
            throw InputError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

const json& section(const json& root, const char* key)
{
    static const json empty = json::object();
    if (!root.contains(key)) {
        return empty;
    }
    const auto& s = root.at(key);
    if (!s.is_object()) {
        throw InputError(std::string("config section '") + key + "' must be an object");
    }
    return s;
}

std::vector<double> centered(std::vector<double> x)
{
    // A constant axis must come out exactly zero so the trace counts as empty.
    if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) {
        std::fill(x.begin(), x.end(), 0.0);
        return x;
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    for (double& v : x) {
        v -= mean;
    }
    return x;
}

std::vector<double> mesors(const RhythmReport& report, rhythm::Metric metric, std::vector<std::string>* subjects)
{
    std::vector<double> out;
    for (const auto& row : report.fits) {
        if (row.metric == metric) {
            out.push_back(row.fit.mesor);
            if (subjects != nullptr) {
                subjects->push_back(row.subject);
            }
        }
    }
    return out;
}

} // namespace

void PipelineConfig::validate() const
{
    extraction.validate();
    metrics.validate();
    if (!(schedule.duration_s > 0.0) || !(schedule.period_s >= schedule.duration_s)) {
        throw PreconditionError("window schedule needs 0 < duration <= period");
    }
    if (!(period_h > 0.0)) {
        throw PreconditionError("rhythm period must be positive");
    }
    if (!(filter.cutoff_hz > 0.0) || filter.order < 1 || filter.order > 8) {
        throw PreconditionError("filter needs a positive cutoff and order in 1..8");
    }
}

PipelineConfig parse_config(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw InputError("config must be a JSON object");
    }
    reject_unknown(root,
                   {"filter", "extraction", "schedule", "photoperiod", "metrics", "period_h", "threads", "output_dir"},
                   "");
    PipelineConfig cfg;

    const auto& filter = section(root, "filter");
    reject_unknown(filter, {"cutoff_hz", "order"}, "filter.");
    read_key(filter, "cutoff_hz", cfg.filter.cutoff_hz);
    read_key(filter, "order", cfg.filter.order);
    cfg.metrics.filter = cfg.filter;

    const auto& ex = section(root, "extraction");
    reject_unknown(ex, {"snr_target_db", "max_components", "min_peak_fraction", "refine_max_iter"}, "extraction.");
    read_key(ex, "snr_target_db", cfg.extraction.snr_target_db);
    if (ex.contains("max_components") && !ex.at("max_components").is_null()) {
        std::size_t cap = 0;
        read_key(ex, "max_components", cap);
        cfg.extraction.max_components = cap;
    }
    read_key(ex, "min_peak_fraction", cfg.extraction.min_peak_fraction);
    read_key(ex, "refine_max_iter", cfg.extraction.refine_max_iter);

    const auto& sched = section(root, "schedule");
    reject_unknown(sched, {"period_s", "duration_s"}, "schedule.");
    read_key(sched, "period_s", cfg.schedule.period_s);
    read_key(sched, "duration_s", cfg.schedule.duration_s);

    const auto& photo = section(root, "photoperiod");
    reject_unknown(photo, {"lights_on", "lights_off"}, "photoperiod.");
    std::string on = format_hhmm(cfg.photoperiod.lights_on() / 60.0);
    std::string off = format_hhmm(cfg.photoperiod.lights_off() / 60.0);
    read_key(photo, "lights_on", on);
    read_key(photo, "lights_off", off);
    try {
        cfg.photoperiod = rhythm::Photoperiod(parse_hhmm(on), parse_hhmm(off));
    } catch (const PreconditionError& e) {
        throw InputError(std::string("photoperiod: ") + e.what());
    }

    const auto& met = section(root, "metrics");
    reject_unknown(met, {"activity_scale", "hysteresis_fraction", "method", "min_duration_s"}, "metrics.");
    read_key(met, "activity_scale", cfg.metrics.activity_scale);
    read_key(met, "hysteresis_fraction", cfg.metrics.hysteresis_fraction);
    read_key(met, "min_duration_s", cfg.metrics.min_duration_s);
    if (met.contains("method")) {
        std::string method;
        read_key(met, "method", method);
        if (method == "zero_crossing") {
            cfg.metrics.method = metrics::RespMethod::zero_crossing;
        } else if (method == "spectral_peak") {
            cfg.metrics.method = metrics::RespMethod::spectral_peak;
        } else {
            throw InputError("metrics.method must be zero_crossing or spectral_peak");
        }
    }

    read_key(root, "period_h", cfg.period_h);
    read_key(root, "threads", cfg.threads);
    if (root.contains("output_dir")) {
        std::string dir;
        read_key(root, "output_dir", dir);
        cfg.output_dir = dir;
    }
    try {
        cfg.validate();
    } catch (const PreconditionError& e) {
        throw InputError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_json(const PipelineConfig& cfg)
{
    nlohmann::ordered_json j;
    j["filter"] = {{"cutoff_hz", cfg.filter.cutoff_hz}, {"order", cfg.filter.order}};
    nlohmann::ordered_json ex;
    ex["snr_target_db"] = cfg.extraction.snr_target_db;
    ex["max_components"] = cfg.extraction.max_components ? nlohmann::ordered_json(*cfg.extraction.max_components)
                                                         : nlohmann::ordered_json(nullptr);
    ex["min_peak_fraction"] = cfg.extraction.min_peak_fraction;
    ex["refine_max_iter"] = cfg.extraction.refine_max_iter;
    j["extraction"] = ex;
    j["schedule"] = {{"period_s", cfg.schedule.period_s}, {"duration_s", cfg.schedule.duration_s}};
    j["photoperiod"] = {{"lights_on", format_hhmm(cfg.photoperiod.lights_on() / 60.0)},
                        {"lights_off", format_hhmm(cfg.photoperiod.lights_off() / 60.0)}};
    j["metrics"] = {{"activity_scale", cfg.metrics.activity_scale},
                    {"hysteresis_fraction", cfg.metrics.hysteresis_fraction},
                    {"method", cfg.metrics.method == metrics::RespMethod::zero_crossing ? "zero_crossing"
                                                                                       : "spectral_peak"},
                    {"min_duration_s", cfg.metrics.min_duration_s}};
    j["period_h"] = cfg.period_h;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir.string();
    return j.dump(2) + "\n";
}

DecomposeTarget parse_decompose_target(std::string_view name)
{
    if (name == "operculum") {
        return DecomposeTarget::operculum;
    }
    if (name == "body") {
        return DecomposeTarget::body;
    }
    throw InputError("unknown decompose target '" + std::string(name) + "' (expected operculum or body)");
}

kinematics::VelocityTrace velocity_trace(const ingest::Recording& rec, const PipelineConfig& cfg,
                                         const DecomposeOptions& options)
{
    using kinematics::Axis;
    const auto samples = rec.samples();
    const double rate = rec.rate_hz();
    const double t0 = rec.start_s();
    auto one_axis = [&](Axis axis) {
        auto values = kinematics::axis_values(samples, axis);
        if (!options.detrend) {
            return kinematics::integrate_axis(values, rate, axis, t0);
        }
        return kinematics::detrend(kinematics::integrate_axis(centered(std::move(values)), rate, axis, t0),
                                   cfg.filter);
    };
    if (options.target == DecomposeTarget::operculum) {
        return one_axis(Axis::z);
    }
    return kinematics::body_speed(one_axis(Axis::x), one_axis(Axis::y));
}

DecomposeOutput run_decompose(const ingest::Recording& rec, const PipelineConfig& cfg, const DecomposeOptions& options)
{
    cfg.validate();
    if (rec.size() < 2) {
        throw PreconditionError("recording too short to decompose");
    }
    DecomposeOutput out;
    out.result = extraction::decompose(velocity_trace(rec, cfg, options), cfg.extraction);
    for (const auto& c : out.result.sequence.components()) {
        out.features.push_back(lognormal::shape_features(c));
    }
    if (!out.features.empty()) {
        out.summary = lognormal::aggregate_features(out.features);
    }
    return out;
}

std::vector<metrics::WindowSummary> run_monitor(const ingest::Recording& rec, const PipelineConfig& cfg)
{
    cfg.validate();
    auto mcfg = cfg.metrics;
    mcfg.filter = cfg.filter;
    const auto windows = ingest::slice_windows(rec, cfg.schedule);
    const TimePoint start = rec.session().start_utc;
    return parallel_map(
        windows, [&](const ingest::MeasurementWindow& w) { return metrics::summarize_window(w, start, mcfg); },
        cfg.threads);
}

rhythm::MetricSeries series_from_windows(const SubjectWindows& subject, rhythm::Metric metric)
{
    std::vector<rhythm::MetricPoint> points;
    for (const auto& row : subject.rows) {
        if (row.flags.clipped) {
            continue;
        }
        if (metric == rhythm::Metric::activity) {
            points.push_back({row.window_start, row.activity_index});
        } else if (!row.flags.zero_signal) {
            points.push_back({row.window_start, row.resp_freq_hz});
        }
    }
    return rhythm::MetricSeries(std::move(points), metric, subject.subject);
}

RhythmReport run_rhythm(std::span<const SubjectWindows> subjects, const PipelineConfig& cfg, std::string group)
{
    cfg.validate();
    if (subjects.empty()) {
        throw PreconditionError("rhythm analysis needs at least one subject");
    }
    std::set<std::string> seen;
    for (const auto& s : subjects) {
        if (!seen.insert(s.subject).second) {
            throw InputError("duplicate subject id '" + s.subject + "'");
        }
    }

    RhythmReport report;
    report.group = std::move(group);

    struct Trimmed {
        rhythm::MetricSeries activity;
        rhythm::MetricSeries respiration;
    };
    const std::vector<SubjectWindows> items(subjects.begin(), subjects.end());
    const auto trimmed = parallel_map(
        items,
        [&](const SubjectWindows& s) {
            return Trimmed{rhythm::trim_partial_phases(series_from_windows(s, rhythm::Metric::activity), cfg.photoperiod),
                           rhythm::trim_partial_phases(series_from_windows(s, rhythm::Metric::respiration),
                                                       cfg.photoperiod)};
        },
        cfg.threads);

    const auto fits = parallel_map(
        trimmed,
        [&](const Trimmed& t) {
            return std::pair{rhythm::cosinor_fit(t.activity, cfg.period_h),
                             rhythm::cosinor_fit(t.respiration, cfg.period_h)};
        },
        cfg.threads);

    std::vector<rhythm::MetricSeries> activity;
    std::vector<rhythm::MetricSeries> respiration;
    for (std::size_t i = 0; i < items.size(); ++i) {
        report.fits.push_back({items[i].subject, rhythm::Metric::activity, fits[i].first});
        report.fits.push_back({items[i].subject, rhythm::Metric::respiration, fits[i].second});
        activity.push_back(trimmed[i].activity);
        respiration.push_back(trimmed[i].respiration);
    }

    const double resolution_s = std::max(1.0, 0.5 * cfg.schedule.duration_s);
    const auto consensus_activity = rhythm::consensus_series(activity, resolution_s);
    const auto consensus_resp = rhythm::consensus_series(respiration, resolution_s);
    report.consensus.push_back({"consensus", rhythm::Metric::activity,
                                rhythm::cosinor_fit(consensus_activity, cfg.period_h)});
    report.consensus.push_back({"consensus", rhythm::Metric::respiration,
                                rhythm::cosinor_fit(consensus_resp, cfg.period_h)});

    auto couple = [&](const std::string& subject, const rhythm::MetricSeries& a, const rhythm::MetricSeries& b) {
        try {
            const auto r = rhythm::coupling_correlation(a, b);
            report.coupling.push_back({subject, r.statistic, r.p_value, r.n_a});
        } catch (const PreconditionError& e) {
            report.warnings.push_back("coupling for '" + subject + "' skipped: " + e.what());
        }
    };
    for (std::size_t i = 0; i < items.size(); ++i) {
        couple(items[i].subject, activity[i], respiration[i]);
    }
    couple("consensus", consensus_activity, consensus_resp);

    report.activity_profile = rhythm::daily_profile(activity, 15, &cfg.photoperiod);
    report.respiration_profile = rhythm::daily_profile(respiration, 15, &cfg.photoperiod);
    return report;
}

std::vector<ComparisonRow> run_compare(const RhythmReport& a, const RhythmReport& b,
                                       const std::map<std::string, double>* weights,
                                       std::vector<std::string>* warnings)
{
    std::vector<ComparisonRow> rows;
    auto warn = [&](std::string text) {
        if (warnings != nullptr) {
            warnings->push_back(std::move(text));
        }
    };
    for (const auto metric : {rhythm::Metric::activity, rhythm::Metric::respiration}) {
        const std::string name(rhythm::metric_name(metric));
        const auto xa = mesors(a, metric, nullptr);
        const auto xb = mesors(b, metric, nullptr);
        if (xa.empty() || xb.empty()) {
            throw PreconditionError("compare: group without " + name + " fits");
        }
        const auto mw = stats::mann_whitney_u(xa, xb);
        rows.push_back({name, a.group, b.group, mw.method, mw.statistic, mw.p_value});
        try {
            const auto tt = stats::t_test(xa, xb);
            rows.push_back({name, a.group, b.group, tt.method, tt.statistic, tt.p_value});
        } catch (const PreconditionError& e) {
            warn("t test for " + name + " skipped: " + e.what());
        }
    }
    if (weights == nullptr) {
        warn("no body weights given; Pearson rows omitted");
        return rows;
    }
    for (const auto* report : {&a, &b}) {
        for (const auto metric : {rhythm::Metric::activity, rhythm::Metric::respiration}) {
            const std::string name(rhythm::metric_name(metric));
            std::vector<std::string> subjects;
            const auto values = mesors(*report, metric, &subjects);
            std::vector<double> w;
            std::vector<double> m;
            for (std::size_t i = 0; i < subjects.size(); ++i) {
                const auto it = weights->find(subjects[i]);
                if (it != weights->end()) {
                    w.push_back(it->second);
                    m.push_back(values[i]);
                }
            }
            if (w.size() < 3) {
                warn("group '" + report->group + "': fewer than 3 subjects with body weight; Pearson " + name +
                     " row omitted");
                continue;
            }
            try {
                const auto r = stats::pearson(w, m);
                rows.push_back({name, report->group, "body_weight_g", r.method, r.statistic, r.p_value});
            } catch (const PreconditionError& e) {
                warn("Pearson " + name + " for '" + report->group + "' skipped: " + e.what());
            }
        }
    }
    return rows;
}

} // namespace operkit::pipeline
