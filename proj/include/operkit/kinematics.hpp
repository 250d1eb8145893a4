#pragma once

#include "operkit/ingest.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace operkit::kinematics {

enum class Axis { z, body, x, y };

std::string_view axis_name(Axis axis);

/// Uniformly sampled velocity trace (g·s). Sample i sits at
/// t_start_s + i / rate_hz. The first and last `transient_samples` are
/// filter-edge transients and are excluded from feature extraction.
struct VelocityTrace {
    std::vector<double> values;
    double rate_hz = 0.0;
    Axis origin = Axis::z;
    double t_start_s = 0.0;
    std::size_t transient_samples = 0;

    std::size_t size() const noexcept { return values.size(); }
    double time_at(std::size_t i) const noexcept { return t_start_s + static_cast<double>(i) / rate_hz; }
    double duration_s() const noexcept { return static_cast<double>(values.size()) / rate_hz; }
};

/// Zero-phase low-pass used by the two-step high-pass detrend.
struct FilterSpec {
    double cutoff_hz = 1.0;
    int order = 2;

    // Throws PreconditionError unless 0 < cutoff < rate/2 and 1 <= order <= 8.
    void validate(double rate_hz) const;
};

/// Cumulative trapezoidal integral with v(0) = 0.
VelocityTrace integrate_axis(std::span<const double> acc, double rate_hz, Axis origin = Axis::z,
                             double t_start_s = 0.0);

/// Butterworth low-pass run forward and backward with odd-reflection padding
/// and steady-state initial conditions. Exposed for tests and debugging.
std::vector<double> zero_phase_lowpass(std::span<const double> x, double rate_hz, const FilterSpec& spec);

/// v - lowpass(v). Marks the first/last second as transient.
VelocityTrace detrend(const VelocityTrace& v, const FilterSpec& spec);

/// sqrt(vx^2 + vy^2) pointwise.
VelocityTrace body_speed(const VelocityTrace& vx, const VelocityTrace& vy);

struct AxisSelection {
    bool x = true;
    bool y = true;
    bool z = false;
};

/// Euclidean norm over the selected axes of the first difference times rate
/// (g/s). Output has one sample less than the input.
std::vector<double> jerk_magnitude(std::span<const ingest::Sample> acc, AxisSelection axes, double rate_hz);

std::vector<double> axis_values(std::span<const ingest::Sample> samples, Axis axis);

/// Debug dump: "t_s,value" rows.
std::string trace_csv(const VelocityTrace& v);

} // namespace operkit::kinematics
