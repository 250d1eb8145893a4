#pragma once

#include "operkit/ingest.hpp"
#include "operkit/kinematics.hpp"
#include "operkit/timeutil.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace operkit::metrics {

struct QualityFlags {
    bool zero_signal = false;
    bool clipped = false;

    bool any() const noexcept { return zero_signal || clipped; }
    bool operator==(const QualityFlags&) const = default;
};

// "zero_signal;clipped", or "" when no flag is set.
std::string flags_to_string(const QualityFlags& flags);
QualityFlags parse_flags(std::string_view text);

struct WindowSummary {
    TimePoint window_start;
    double activity_index = 0.0;
    double resp_freq_hz = 0.0;
    QualityFlags flags;

    bool operator==(const WindowSummary&) const = default;
};

enum class RespMethod { zero_crossing, spectral_peak };

struct MetricsConfig {
    double activity_scale = 0.05;
    kinematics::FilterSpec filter;
    // Hysteresis half-band as a fraction of the detrended-velocity RMS.
    double hysteresis_fraction = 0.1;
    RespMethod method = RespMethod::zero_crossing;
    double min_duration_s = 10.0;

    void validate() const;
};

struct RespEstimate {
    double hz = 0.0;
    bool zero_signal = false;
    std::size_t crossings = 0;
};

/// Breathing rate from operculum (z) acceleration: integrate, high-pass
/// detrend, count hysteresis zero crossings of the velocity over the
/// non-transient interior, and divide by twice the interior duration.
RespEstimate respiratory_frequency(std::span<const double> z, double rate_hz, const MetricsConfig& cfg = {});

/// scale * RMS of the x/y jerk magnitude.
double activity_index(std::span<const ingest::Sample> samples, double rate_hz, double scale);

// Raw readings at or beyond the AEFB full-scale range are treated as clipped.
inline constexpr double kClipLevelG = 32767.0 / 4096.0;

WindowSummary summarize_window(const ingest::MeasurementWindow& w, TimePoint session_start,
                               const MetricsConfig& cfg = {});

inline constexpr std::string_view kWindowCsvHeader = "window_start_iso8601,activity_index,resp_freq_hz,flags";

std::string window_csv(std::span<const WindowSummary> rows);
std::vector<WindowSummary> parse_window_csv(std::string_view text);

} // namespace operkit::metrics
