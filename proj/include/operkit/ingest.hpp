#pragma once

#include "operkit/timeutil.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace operkit::ingest {

/// One tri-axial accelerometer reading. `t` is seconds since session start,
/// accelerations are in g.
struct Sample {
    double t = 0.0;
    double ax = 0.0;
    double ay = 0.0;
    double az = 0.0;

    bool operator==(const Sample&) const = default;
};

struct SessionInfo {
    std::string device_id;
    std::string species;
    std::optional<double> body_weight_g;
    TimePoint start_utc{};
    std::optional<double> swim_speed_bls;

    bool operator==(const SessionInfo&) const = default;
};

/// An immutable, validated recording: strictly increasing timestamps spaced
/// 1/rate_hz apart (within 1e-9 s), positive rate, finite accelerations.
class Recording {
public:
    Recording(std::vector<Sample> samples, double rate_hz, SessionInfo session = {});

    std::span<const Sample> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double rate_hz() const noexcept { return rate_hz_; }
    const SessionInfo& session() const noexcept { return session_; }

    // Covered interval is [start_s, end_s): the last sample owns one period.
    double start_s() const noexcept;
    double end_s() const noexcept;
    double duration_s() const noexcept { return static_cast<double>(samples_.size()) / rate_hz_; }

    Recording with_session(SessionInfo session) const;

    bool operator==(const Recording&) const = default;

private:
    std::vector<Sample> samples_;
    double rate_hz_;
    SessionInfo session_;
};

/// Linear device clock error: t_true = t_device * (1 + drift_ppm*1e-6) + offset_s.
class DriftModel {
public:
    DriftModel() = default;
    DriftModel(double drift_ppm, double offset_s);

    double drift_ppm() const noexcept { return drift_ppm_; }
    double offset_s() const noexcept { return offset_s_; }
    double scale() const noexcept { return 1.0 + drift_ppm_ * 1e-6; }
    double apply(double t) const noexcept { return t * scale() + offset_s_; }

    bool operator==(const DriftModel&) const = default;

private:
    double drift_ppm_ = 0.0;
    double offset_s_ = 0.0;
};

struct WindowSchedule {
    double period_s = 900.0;
    double duration_s = 120.0;
};

/// A complete measurement window. `samples` views the parent Recording,
/// which must outlive the window.
struct MeasurementWindow {
    double start_s = 0.0;
    double duration_s = 0.0;
    double rate_hz = 0.0;
    std::span<const Sample> samples;
};

enum class Format { csv, aefb };

Format parse_format(std::string_view name);
// By extension: ".aefb" / ".bin" -> aefb, anything else -> csv.
Format guess_format(const std::filesystem::path& path);

inline constexpr std::string_view kCsvHeader = "t_s,ax_g,ay_g,az_g";
inline constexpr double kAefbLsbPerG = 4096.0;

/// Parses a CSV or AEFB stream. The CSV sampling rate is inferred from the
/// timestamps unless `rate_hint` is given (required for single-row files).
/// Throws InputError on any format violation.
Recording parse_recording(std::istream& in, Format format, std::optional<double> rate_hint = {});
Recording read_recording(const std::filesystem::path& path, Format format);

/// AEFB output quantizes to 1/4096 g and saturates at the i16 range; the
/// rate must be an integer in [1, 65535] and timestamps are implied as i/rate.
void emit_recording(std::ostream& out, const Recording& rec, Format format);
void write_recording(const std::filesystem::path& path, const Recording& rec, Format format);

Recording correct_clock_drift(const Recording& rec, const DriftModel& model);

/// Complete windows starting at k*period_s (k >= 0, session-relative), in order.
std::vector<MeasurementWindow> slice_windows(const Recording& rec, const WindowSchedule& schedule);

/// Session metadata JSON sidecar.
struct SessionSidecar {
    SessionInfo session;
    DriftModel drift;

    bool operator==(const SessionSidecar&) const = default;
};

SessionSidecar read_session_sidecar(const std::filesystem::path& path);
void write_session_sidecar(const std::filesystem::path& path, const SessionSidecar& sidecar);
std::string session_sidecar_json(const SessionSidecar& sidecar);
SessionSidecar parse_session_sidecar(std::string_view json_text);

} // namespace operkit::ingest
