#include "operkit/metrics.hpp"

#include "operkit/error.hpp"
#include "operkit/textio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace operkit::metrics {

namespace {

constexpr double kFlatStdG = 1e-9;

double population_sd(std::span<const double> x)
{
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(x.size()));
}

// Power of a real sequence at frequency f (Goertzel recurrence).
double goertzel_power(std::span<const double> x, double f, double rate_hz)
{
    const double w = 2.0 * std::numbers::pi * f / rate_hz;
    const double coeff = 2.0 * std::cos(w);
    double s1 = 0.0;
    double s2 = 0.0;
    for (double v : x) {
        const double s0 = v + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    return s1 * s1 + s2 * s2 - coeff * s1 * s2;
}

double spectral_peak(std::span<const double> x, double rate_hz)
{
    constexpr double kLow = 0.5;
    constexpr double kHigh = 5.0;
    constexpr double kStep = 0.005;
    const double high = std::min(kHigh, 0.45 * rate_hz);
    std::vector<double> power;
    for (double f = kLow; f <= high + 1e-12; f += kStep) {
        power.push_back(goertzel_power(x, f, rate_hz));
    }
    const auto best = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
    double offset = 0.0;
    if (best > 0 && best + 1 < power.size()) {
        const double a = power[best - 1];
        const double b = power[best];
        const double c = power[best + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) {
            offset = 0.5 * (a - c) / denom;
        }
    }
    return kLow + (static_cast<double>(best) + offset) * kStep;
}

} // namespace

std::string flags_to_string(const QualityFlags& flags)
{
    std::string out;
    if (flags.zero_signal) {
        out += "zero_signal";
    }
    if (flags.clipped) {
        out += out.empty() ? "clipped" : ";clipped";
    }
    return out;
}

QualityFlags parse_flags(std::string_view text)
{
    QualityFlags flags;
    if (text.empty()) {
        return flags;
    }
    for (auto token : split_fields(text, ';')) {
        if (token == "zero_signal") {
            flags.zero_signal = true;
        } else if (token == "clipped") {
            flags.clipped = true;
        } else {
            throw InputError("unknown quality flag '" + std::string(token) + "'");
        }
    }
    return flags;
}

void MetricsConfig::validate() const
{
    if (!(activity_scale > 0.0) || !std::isfinite(activity_scale)) {
        throw PreconditionError("activity scale must be positive");
    }
    if (!(hysteresis_fraction >= 0.0 && hysteresis_fraction < 1.0)) {
        throw PreconditionError("hysteresis fraction must lie in [0, 1)");
    }
    if (!(min_duration_s > 0.0)) {
        throw PreconditionError("minimum window duration must be positive");
    }
}

RespEstimate respiratory_frequency(std::span<const double> z, double rate_hz, const MetricsConfig& cfg)
{
    cfg.validate();
    const double duration = static_cast<double>(z.size()) / rate_hz;
    if (z.size() < 2 || duration < cfg.min_duration_s - 1e-9) {
        throw PreconditionError("respiratory_frequency needs at least " + format_double(cfg.min_duration_s) +
                                " s of data");
    }
    RespEstimate est;
    if (population_sd(z) <= kFlatStdG) {
        est.zero_signal = true;
        return est;
    }

    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
    std::vector<double> centered(z.begin(), z.end());
    for (double& v : centered) {
        v -= mean;
    }
    const auto v = kinematics::detrend(kinematics::integrate_axis(centered, rate_hz), cfg.filter);
    const std::size_t lo = v.transient_samples;
    const std::size_t hi = v.size() - v.transient_samples;
    const std::span<const double> interior(v.values.data() + lo, hi - lo);
    const double interior_s = static_cast<double>(interior.size()) / rate_hz;

    double ss = 0.0;
    for (double x : interior) {
        ss += x * x;
    }
    const double rms = std::sqrt(ss / static_cast<double>(interior.size()));
    if (!(rms > 0.0)) {
        est.zero_signal = true;
        return est;
    }

    if (cfg.method == RespMethod::spectral_peak) {
        est.hz = spectral_peak(interior, rate_hz);
        return est;
    }

    const double band = cfg.hysteresis_fraction * rms;
    int state = 0;
    for (double x : interior) {
        if (x > band && state <= 0) {
            if (state < 0) {
                ++est.crossings;
            }
            state = 1;
        } else if (x < -band && state >= 0) {
            if (state > 0) {
                ++est.crossings;
            }
            state = -1;
        }
    }
    est.hz = static_cast<double>(est.crossings) / (2.0 * interior_s);
    return est;
}

double activity_index(std::span<const ingest::Sample> samples, double rate_hz, double scale)
{
    const auto jerk = kinematics::jerk_magnitude(samples, kinematics::AxisSelection{}, rate_hz);
    double ss = 0.0;
    for (double j : jerk) {
        ss += j * j;
    }
    return scale * std::sqrt(ss / static_cast<double>(jerk.size()));
}

WindowSummary summarize_window(const ingest::MeasurementWindow& w, TimePoint session_start, const MetricsConfig& cfg)
{
    WindowSummary out;
    out.window_start = add_seconds(session_start, w.start_s);
    const auto z = kinematics::axis_values(w.samples, kinematics::Axis::z);
    const auto resp = respiratory_frequency(z, w.rate_hz, cfg);
    out.resp_freq_hz = resp.hz;
    out.activity_index = activity_index(w.samples, w.rate_hz, cfg.activity_scale);
    out.flags.zero_signal = resp.zero_signal;
    out.flags.clipped = std::any_of(w.samples.begin(), w.samples.end(), [](const ingest::Sample& s) {
        return std::abs(s.ax) >= kClipLevelG || std::abs(s.ay) >= kClipLevelG || std::abs(s.az) >= kClipLevelG;
    });
    return out;
}

std::string window_csv(std::span<const WindowSummary> rows)
{
    std::string out(kWindowCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += format_iso8601(r.window_start);
        out += ',' + format_double(r.activity_index) + ',' + format_double(r.resp_freq_hz) + ',' +
               flags_to_string(r.flags) + '\n';
    }
    return out;
}

std::vector<WindowSummary> parse_window_csv(std::string_view text)
{
    std::vector<WindowSummary> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        if (line_no == 1) {
            // The flags column is optional on input.
            if (line != kWindowCsvHeader && line != "window_start_iso8601,activity_index,resp_freq_hz") {
                throw InputError("unexpected window CSV header: '" + std::string(line) + "'");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3 && fields.size() != 4) {
            throw InputError("window CSV line " + std::to_string(line_no) + ": expected 3 or 4 fields");
        }
        WindowSummary row;
        row.window_start = parse_iso8601(fields[0]);
        row.activity_index = parse_double(fields[1]);
        row.resp_freq_hz = parse_double(fields[2]);
        if (fields.size() == 4) {
            row.flags = parse_flags(fields[3]);
        }
        if (!rows.empty() && !(row.window_start > rows.back().window_start)) {
            throw InputError("window CSV line " + std::to_string(line_no) + ": timestamps not increasing");
        }
        rows.push_back(row);
    }
    if (line_no == 0) {
        throw InputError("window CSV is empty (missing header)");
    }
    return rows;
}

} // namespace operkit::metrics
