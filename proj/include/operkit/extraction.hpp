#pragma once

#include "operkit/kinematics.hpp"
#include "operkit/lognormal.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace operkit::extraction {

struct ExtractionConfig {
    double snr_target_db = 25.0;
    // Unset means four components per second of trace.
    std::optional<std::size_t> max_components;
    double min_peak_fraction = 0.05;
    int refine_max_iter = 200;

    void validate() const;
    std::size_t component_cap(double trace_seconds) const;
};

struct ExtractionResult {
    lognormal::LognormalSequence sequence;
    double snr_db = 0.0;
    double residual_rms = 0.0;
    bool zero_trace = false;
    bool refine_converged = true;
};

/// Shape of one residual lobe: interpolated peak and half-height crossings.
struct Lobe {
    double peak_time = 0.0;
    double peak_value = 0.0;
    double left_half_time = 0.0;
    double right_half_time = 0.0;
    double area = 0.0; // integral between the half-height crossings
};

/// Measures the lobe around sample `peak_index` of a uniformly sampled
/// signal, searching for half-height crossings within [lo, hi). Returns
/// nullopt when either crossing is missing or the sample is not a peak.
std::optional<Lobe> measure_lobe(std::span<const double> signal, double t_start, double rate_hz,
                                 std::size_t peak_index, std::size_t lo, std::size_t hi);

/// Lognormal whose half-height points and area match the lobe. Sigma comes
/// from the right/left half-width ratio (the lognormal is symmetric in
/// log-time about its mode), raised if needed to keep t0 >= t_min.
std::optional<lognormal::LognormalComponent> estimate_initial(const Lobe& lobe, double t_min);

struct RefineResult {
    lognormal::LognormalSequence sequence;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Bounded Levenberg-Marquardt over all 4n parameters minimizing
/// ||v - eval_sequence||^2 on the non-transient samples. Bounds: sigma in
/// [1e-3, 1], D > 0, t0 within the trace span. Returns the best iterate;
/// `converged` is false when refine_max_iter ran out.
RefineResult refine_sequence(const lognormal::LognormalSequence& seq, const kinematics::VelocityTrace& v,
                             const ExtractionConfig& cfg);

/// 20 log10(||v|| / ||v - recon||); +infinity when they match exactly.
/// Throws PreconditionError on length mismatch or zero-norm v.
double reconstruction_snr(std::span<const double> v, std::span<const double> recon);

/// Greedy peak-by-peak decomposition of |v| with joint refinement.
ExtractionResult decompose(const kinematics::VelocityTrace& v, const ExtractionConfig& cfg);

/// {"components":[{"t0","D","mu","sigma"}...],"snr_db",...}
std::string result_json(const ExtractionResult& result);

} // namespace operkit::extraction
