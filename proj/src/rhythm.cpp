#include "operkit/rhythm.hpp"

#include "operkit/error.hpp"
#include "operkit/textio.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace operkit::rhythm {

namespace {

constexpr long long kMsPerMinute = 60'000;
constexpr long long kMsPerDay = 86'400'000;

double hours_between(TimePoint from, TimePoint to)
{
    return static_cast<double>((to - from).count()) / 3.6e6;
}

} // namespace

std::string_view metric_name(Metric metric)
{
    return metric == Metric::activity ? "activity" : "respiration";
}

Metric parse_metric(std::string_view name)
{
    if (name == "activity") {
        return Metric::activity;
    }
    if (name == "respiration") {
        return Metric::respiration;
    }
    throw InputError("unknown metric '" + std::string(name) + "'");
}

MetricSeries::MetricSeries(std::vector<MetricPoint> points, Metric metric, std::string subject)
    : points_(std::move(points)), metric_(metric), subject_(std::move(subject))
{
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].value)) {
            throw PreconditionError("metric series contains a non-finite value");
        }
        if (i > 0 && !(points_[i].t > points_[i - 1].t)) {
            throw PreconditionError("metric series times must be strictly increasing");
        }
    }
}

double MetricSeries::typical_step_s() const
{
    if (points_.size() < 2) {
        return 0.0;
    }
    std::vector<double> steps;
    steps.reserve(points_.size() - 1);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        steps.push_back(static_cast<double>((points_[i].t - points_[i - 1].t).count()) / 1000.0);
    }
    std::nth_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2), steps.end());
    return steps[steps.size() / 2];
}

std::string RhythmFit::acrophase_hhmm() const
{
    return format_hhmm(acrophase_h);
}

Photoperiod::Photoperiod(int lights_on_min, int lights_off_min) : on_(lights_on_min), off_(lights_off_min)
{
    if (on_ < 0 || on_ >= 1440 || off_ < 0 || off_ >= 1440) {
        throw PreconditionError("photoperiod clock times must lie in [00:00, 24:00)");
    }
    if (on_ == off_) {
        throw PreconditionError("lights-on and lights-off must differ");
    }
}

bool Photoperiod::is_dark_clock(double minute_of_day) const
{
    const double m = minute_of_day;
    if (on_ < off_) {
        return m < on_ || m >= off_;
    }
    return m >= off_ && m < on_;
}

bool Photoperiod::is_dark(TimePoint t) const
{
    return is_dark_clock(seconds_of_day(t) / 60.0);
}

std::pair<TimePoint, TimePoint> Photoperiod::phase_bounds(TimePoint t) const
{
    const TimePoint midnight = midnight_of(t);
    std::vector<TimePoint> transitions;
    for (int day = -1; day <= 1; ++day) {
        for (int minute : {on_, off_}) {
            transitions.push_back(midnight + Millis{day * kMsPerDay + minute * kMsPerMinute});
        }
    }
    std::sort(transitions.begin(), transitions.end());
    TimePoint before = transitions.front();
    TimePoint after = transitions.back();
    for (const TimePoint tr : transitions) {
        if (tr <= t) {
            before = tr;
        } else {
            after = tr;
            break;
        }
    }
    return {before, after};
}

RhythmFit cosinor_fit(const MetricSeries& s, double period_h)
{
    if (!(period_h > 0.0)) {
        throw PreconditionError("cosinor period must be positive");
    }
    const auto& pts = s.points();
    if (pts.size() < 4) {
        throw PreconditionError("insufficient points for cosinor fit (need 4)");
    }
    const double span_h = hours_between(pts.front().t, pts.back().t) + s.typical_step_s() / 3600.0;
    if (span_h < period_h - 1e-9) {
        throw PreconditionError("insufficient span for cosinor fit: " + format_double(span_h) + " h < period");
    }

    const TimePoint reference = midnight_of(pts.front().t);
    const double omega = 2.0 * std::numbers::pi / period_h;
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double phase = omega * hours_between(reference, pts[static_cast<std::size_t>(i)].t);
        design(i, 0) = 1.0;
        design(i, 1) = std::cos(phase);
        design(i, 2) = std::sin(phase);
        y(i) = pts[static_cast<std::size_t>(i)].value;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) {
        throw PreconditionError("singular cosinor design (samples do not resolve the phase)");
    }
    const Eigen::VectorXd coef = qr.solve(y);
    const Eigen::VectorXd residual = y - design * coef;

    RhythmFit fit;
    fit.period_h = period_h;
    fit.n = pts.size();
    fit.mesor = coef(0);
    fit.amplitude = std::hypot(coef(1), coef(2));
    double angle = std::atan2(coef(2), coef(1));
    if (angle < 0.0) {
        angle += 2.0 * std::numbers::pi;
    }
    if (angle >= 2.0 * std::numbers::pi) {
        angle = 0.0;
    }
    fit.acrophase_rad = angle;
    fit.acrophase_h = angle / omega;
    fit.rss = residual.squaredNorm();

    const double total = (y.array() - y.mean()).matrix().squaredNorm();
    const double df_resid = static_cast<double>(pts.size()) - 3.0;
    const double explained = std::max(0.0, total - fit.rss);
    if (explained == 0.0) {
        // Flat or rhythm-free data; rounding noise must not pass for signal.
        fit.f_statistic = 0.0;
        fit.p_value = 1.0;
    } else if (df_resid > 0.0 && fit.rss > 0.0 && std::isfinite(explained / fit.rss)) {
        fit.f_statistic = (explained / 2.0) / (fit.rss / df_resid);
        const double x = std::clamp(df_resid / (df_resid + 2.0 * fit.f_statistic), 0.0, 1.0);
        fit.p_value = boost::math::ibeta(0.5 * df_resid, 1.0, x);
    } else {
        fit.f_statistic = INFINITY;
        fit.p_value = 0.0;
    }
    return fit;
}

MetricSeries trim_partial_phases(const MetricSeries& s, const Photoperiod& p)
{
    const auto& pts = s.points();
    if (pts.empty()) {
        throw PreconditionError("no complete light/dark phase in series");
    }
    const Millis step{static_cast<long long>(std::llround(s.typical_step_s() * 1000.0))};

    const auto [first_start, first_end] = p.phase_bounds(pts.front().t);
    const TimePoint keep_from = pts.front().t == first_start ? pts.front().t : first_end;

    const auto [last_start, last_end] = p.phase_bounds(pts.back().t);
    const bool last_complete = pts.back().t + step >= last_end;

    std::vector<MetricPoint> kept;
    for (const auto& pt : pts) {
        if (pt.t < keep_from) {
            continue;
        }
        if (!last_complete && pt.t >= last_start) {
            continue;
        }
        kept.push_back(pt);
    }
    if (kept.empty()) {
        throw PreconditionError("no complete light/dark phase in series");
    }
    return MetricSeries(std::move(kept), s.metric(), s.subject());
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty()) {
        throw PreconditionError("percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DailyProfile daily_profile(std::span<const MetricSeries> series, int bin_minutes, const Photoperiod* photoperiod)
{
    if (series.empty()) {
        throw PreconditionError("daily_profile needs at least one series");
    }
    if (bin_minutes <= 0 || 1440 % bin_minutes != 0) {
        throw PreconditionError("bin size must divide 24 h");
    }
    const std::size_t bins = static_cast<std::size_t>(1440 / bin_minutes);
    std::vector<double> sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (const auto& s : series) {
        for (const auto& pt : s.points()) {
            const auto idx = std::min(bins - 1, static_cast<std::size_t>(seconds_of_day(pt.t) / (60.0 * bin_minutes)));
            sum[idx] += pt.value;
            ++count[idx];
        }
    }
    DailyProfile out;
    std::vector<double> means;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) {
            continue;
        }
        ProfileBin bin;
        bin.clock_minute = static_cast<int>(b) * bin_minutes;
        bin.count = count[b];
        bin.mean = sum[b] / static_cast<double>(count[b]);
        bin.dark = photoperiod != nullptr && photoperiod->is_dark_clock(bin.clock_minute);
        means.push_back(bin.mean);
        out.bins.push_back(bin);
    }
    if (means.empty()) {
        throw PreconditionError("daily_profile: no data points");
    }
    out.p20 = percentile(means, 0.2);
    out.p80 = percentile(means, 0.8);
    return out;
}

std::string profile_csv(const DailyProfile& profile)
{
    std::string out = "clock_hhmm,mean,p20,p80,dark_flag\n";
    for (const auto& bin : profile.bins) {
        out += format_hhmm(bin.clock_minute / 60.0);
        out += "," + format_double(bin.mean) + "," + format_double(profile.p20) + "," + format_double(profile.p80);
        out += bin.dark ? ",1\n" : ",0\n";
    }
    return out;
}

MetricSeries consensus_series(std::span<const MetricSeries> series, double resolution_s)
{
    if (series.empty()) {
        throw PreconditionError("consensus of zero series");
    }
    const auto res_ms = std::max<long long>(1, std::llround(resolution_s * 1000.0));
    std::map<long long, std::pair<double, std::size_t>> acc;
    for (const auto& s : series) {
        for (const auto& pt : s.points()) {
            const long long ms = pt.t.time_since_epoch().count();
            const long long key = (ms >= 0 ? (ms + res_ms / 2) : (ms - res_ms / 2)) / res_ms;
            auto& slot = acc[key];
            slot.first += pt.value;
            ++slot.second;
        }
    }
    std::vector<MetricPoint> points;
    points.reserve(acc.size());
    for (const auto& [key, slot] : acc) {
        points.push_back(MetricPoint{TimePoint{Millis{key * res_ms}}, slot.first / static_cast<double>(slot.second)});
    }
    return MetricSeries(std::move(points), series.front().metric(), "consensus");
}

stats::TestResult coupling_correlation(const MetricSeries& a, const MetricSeries& b)
{
    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t j = 0;
    for (const auto& pt : a.points()) {
        while (j < b.size() && b.points()[j].t < pt.t) {
            ++j;
        }
        if (j < b.size() && b.points()[j].t == pt.t) {
            xs.push_back(pt.value);
            ys.push_back(b.points()[j].value);
        }
    }
    if (xs.size() < 3) {
        throw PreconditionError("coupling_correlation: fewer than 3 common time points");
    }
    return stats::pearson(xs, ys);
}

} // namespace operkit::rhythm
