#pragma once

#include "operkit/stats.hpp"
#include "operkit/timeutil.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace operkit::rhythm {

enum class Metric { activity, respiration };

std::string_view metric_name(Metric metric);
Metric parse_metric(std::string_view name);

struct MetricPoint {
    TimePoint t;
    double value = 0.0;

    bool operator==(const MetricPoint&) const = default;
};

/// Strictly increasing times, finite values.
class MetricSeries {
public:
    MetricSeries() = default;
    MetricSeries(std::vector<MetricPoint> points, Metric metric, std::string subject);

    const std::vector<MetricPoint>& points() const noexcept { return points_; }
    Metric metric() const noexcept { return metric_; }
    const std::string& subject() const noexcept { return subject_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

    // Median spacing between consecutive points, in seconds (0 if < 2 points).
    double typical_step_s() const;

private:
    std::vector<MetricPoint> points_;
    Metric metric_ = Metric::activity;
    std::string subject_;
};

struct RhythmFit {
    double mesor = 0.0;
    double amplitude = 0.0;
    double acrophase_rad = 0.0; // in [0, 2 pi)
    double acrophase_h = 0.0;   // hours after midnight UTC, in [0, period_h)
    double period_h = 24.0;
    double rss = 0.0;
    std::size_t n = 0;
    // Zero-amplitude F test on the two harmonic coefficients; informational.
    double f_statistic = 0.0;
    double p_value = 1.0;

    std::string acrophase_hhmm() const;
};

/// Lights-on/off clock times (minutes after midnight UTC).
class Photoperiod {
public:
    Photoperiod(int lights_on_min, int lights_off_min);

    int lights_on() const noexcept { return on_; }
    int lights_off() const noexcept { return off_; }
    bool is_dark(TimePoint t) const;
    bool is_dark_clock(double minute_of_day) const;

    // Phase transitions bracketing t: the latest at or before t and the
    // earliest strictly after it.
    std::pair<TimePoint, TimePoint> phase_bounds(TimePoint t) const;

private:
    int on_;
    int off_;
};

/// y = M + beta cos(wt) + gamma sin(wt), w = 2 pi / period. Throws
/// PreconditionError with fewer than 4 points, a span shorter than one
/// period, or a rank-deficient design.
RhythmFit cosinor_fit(const MetricSeries& s, double period_h = 24.0);

/// Drops leading/trailing points that fall in incomplete light or dark
/// phases. Throws PreconditionError if nothing remains.
MetricSeries trim_partial_phases(const MetricSeries& s, const Photoperiod& p);

/// Linear interpolation between order statistics (q in [0, 1]).
double percentile(std::vector<double> values, double q);

struct ProfileBin {
    int clock_minute = 0;
    double mean = 0.0;
    std::size_t count = 0;
    bool dark = false;
};

struct DailyProfile {
    std::vector<ProfileBin> bins;
    double p20 = 0.0;
    double p80 = 0.0;
};

/// Folds all points onto a 24 h clock in `bin_minutes` bins and averages
/// per bin; p20/p80 are taken over the set of bin means.
DailyProfile daily_profile(std::span<const MetricSeries> series, int bin_minutes = 15,
                           const Photoperiod* photoperiod = nullptr);

/// "clock_hhmm,mean,p20,p80,dark_flag"
std::string profile_csv(const DailyProfile& profile);

/// Mean across subjects at each time point; times are matched after
/// rounding to `resolution_s`.
MetricSeries consensus_series(std::span<const MetricSeries> series, double resolution_s = 60.0);

/// Pearson r over points with identical timestamps.
stats::TestResult coupling_correlation(const MetricSeries& a, const MetricSeries& b);

} // namespace operkit::rhythm
