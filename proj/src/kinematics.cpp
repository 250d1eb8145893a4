#include "operkit/kinematics.hpp"

#include "operkit/error.hpp"
#include "operkit/textio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace operkit::kinematics {

namespace {

// Transposed direct-form II second-order section. First-order sections
// have b2 = a2 = 0.
struct Section {
    double b0, b1, b2, a1, a2;

    void run(std::vector<double>& x) const
    {
        if (x.empty()) {
            return;
        }
        // Steady state for a constant input equal to x[0] (unit DC gain).
        const double x0 = x.front();
        double z2 = (b2 - a2) * x0;
        double z1 = (b1 - a1) * x0 + z2;
        for (double& v : x) {
            const double in = v;
            const double out = b0 * in + z1;
            z1 = b1 * in - a1 * out + z2;
            z2 = b2 * in - a2 * out;
            v = out;
        }
    }
};

std::vector<Section> butterworth_lowpass(double cutoff_hz, double rate_hz, int order)
{
    const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
    const double k2 = k * k;
    std::vector<Section> sections;
    for (int i = 0; i < order / 2; ++i) {
        const double theta = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order);
        const double inv_q = 2.0 * std::cos(theta);
        const double norm = 1.0 / (1.0 + k * inv_q + k2);
        const double b0 = k2 * norm;
        sections.push_back(Section{b0, 2.0 * b0, b0, 2.0 * (k2 - 1.0) * norm, (1.0 - k * inv_q + k2) * norm});
    }
    if (order % 2 == 1) {
        const double norm = 1.0 / (k + 1.0);
        sections.push_back(Section{k * norm, k * norm, 0.0, (k - 1.0) * norm, 0.0});
    }
    return sections;
}

} // namespace

std::string_view axis_name(Axis axis)
{
    switch (axis) {
    case Axis::z:
        return "z";
    case Axis::body:
        return "body";
    case Axis::x:
        return "x";
    case Axis::y:
        return "y";
    }
    return "?";
}

void FilterSpec::validate(double rate_hz) const
{
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) {
        throw PreconditionError("filter cutoff must lie in (0, rate/2)");
    }
    if (order < 1 || order > 8) {
        throw PreconditionError("filter order must be in [1, 8]");
    }
}

VelocityTrace integrate_axis(std::span<const double> acc, double rate_hz, Axis origin, double t_start_s)
{
    if (acc.size() < 2) {
        throw PreconditionError("integration needs at least 2 samples");
    }
    if (!(rate_hz > 0.0)) {
        throw PreconditionError("sampling rate must be positive");
    }
    VelocityTrace v;
    v.rate_hz = rate_hz;
    v.origin = origin;
    v.t_start_s = t_start_s;
    v.values.resize(acc.size());
    const double half_dt = 0.5 / rate_hz;
    double sum = 0.0;
    v.values[0] = 0.0;
    for (std::size_t i = 1; i < acc.size(); ++i) {
        sum += half_dt * (acc[i - 1] + acc[i]);
        v.values[i] = sum;
    }
    return v;
}

std::vector<double> zero_phase_lowpass(std::span<const double> x, double rate_hz, const FilterSpec& spec)
{
    spec.validate(rate_hz);
    const std::size_t n = x.size();
    if (n == 0) {
        return {};
    }
    if (n == 1) {
        return {x[0]};
    }
    const auto sections = butterworth_lowpass(spec.cutoff_hz, rate_hz, spec.order);

    // Half of a 4/fc settling length, reflected about the end points so
    // that constants and ramps continue smoothly.
    const auto pad = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::ceil(2.0 * rate_hz / spec.cutoff_hz)));
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) {
        ext.push_back(2.0 * x[0] - x[i]);
    }
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) {
        ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    for (const Section& s : sections) {
        s.run(ext);
    }
    std::reverse(ext.begin(), ext.end());
    for (const Section& s : sections) {
        s.run(ext);
    }
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

VelocityTrace detrend(const VelocityTrace& v, const FilterSpec& spec)
{
    const auto low = zero_phase_lowpass(v.values, v.rate_hz, spec);
    VelocityTrace out = v;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = v.values[i] - low[i];
    }
    const auto edge = static_cast<std::size_t>(std::llround(v.rate_hz));
    out.transient_samples = std::max(v.transient_samples, std::min(edge, v.values.size() / 2));
    return out;
}

VelocityTrace body_speed(const VelocityTrace& vx, const VelocityTrace& vy)
{
    if (vx.size() != vy.size()) {
        throw PreconditionError("body_speed: length mismatch");
    }
    if (vx.rate_hz != vy.rate_hz) {
        throw PreconditionError("body_speed: rate mismatch");
    }
    VelocityTrace out = vx;
    out.origin = Axis::body;
    out.transient_samples = std::max(vx.transient_samples, vy.transient_samples);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = std::hypot(vx.values[i], vy.values[i]);
    }
    return out;
}

std::vector<double> jerk_magnitude(std::span<const ingest::Sample> acc, AxisSelection axes, double rate_hz)
{
    if (acc.size() < 2) {
        throw PreconditionError("jerk needs at least 2 samples");
    }
    std::vector<double> out(acc.size() - 1);
    for (std::size_t i = 1; i < acc.size(); ++i) {
        const double jx = axes.x ? (acc[i].ax - acc[i - 1].ax) * rate_hz : 0.0;
        const double jy = axes.y ? (acc[i].ay - acc[i - 1].ay) * rate_hz : 0.0;
        const double jz = axes.z ? (acc[i].az - acc[i - 1].az) * rate_hz : 0.0;
        out[i - 1] = std::sqrt(jx * jx + jy * jy + jz * jz);
    }
    return out;
}

std::vector<double> axis_values(std::span<const ingest::Sample> samples, Axis axis)
{
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        switch (axis) {
        case Axis::x:
            out[i] = samples[i].ax;
            break;
        case Axis::y:
            out[i] = samples[i].ay;
            break;
        case Axis::z:
            out[i] = samples[i].az;
            break;
        case Axis::body:
            out[i] = std::hypot(samples[i].ax, samples[i].ay);
            break;
        }
    }
    return out;
}

std::string trace_csv(const VelocityTrace& v)
{
    std::string out = "t_s,value\n";
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        out += format_double(v.time_at(i));
        out.push_back(',');
        out += format_double(v.values[i]);
        out.push_back('\n');
    }
    return out;
}

} // namespace operkit::kinematics
