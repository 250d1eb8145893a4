#pragma once

#include "operkit/ingest.hpp"
#include "operkit/kinematics.hpp"
#include "operkit/lognormal.hpp"
#include "operkit/rhythm.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace operkit::synth {

/// y(t) = mesor + amplitude * cos(2 pi (clock_h(t) - acrophase_h) / 24)
struct CosinorTarget {
    double mesor = 0.0;
    double amplitude = 0.0;
    double acrophase_h = 0.0;

    double at_clock_hours(double clock_h, double period_h = 24.0) const;
};

struct SpeciesProfile {
    std::string name;
    CosinorTarget activity;
    CosinorTarget respiration;
    // Between-subject spread of the mesors.
    double activity_mesor_sd = 0.0;
    double respiration_mesor_sd = 0.0;
    // Body weight distribution (g).
    double body_weight_mean_g = 0.0;
    double body_weight_sd_g = 0.0;

    void validate() const;
};

/// Fish-like presets calibrated to the published group means: sea bream
/// with coupled activity/respiration, sea bass with a 1.5x/2x larger daily
/// range, early-morning activity and a late-afternoon respiration peak.
SpeciesProfile sea_bream_profile();
SpeciesProfile sea_bass_profile();
SpeciesProfile profile_by_name(std::string_view name);

std::string profile_json(const SpeciesProfile& profile, std::uint64_t seed);

/// eval_sequence on a uniform grid plus optional white Gaussian noise whose
/// power sits `noise_snr_db` below the clean signal power.
kinematics::VelocityTrace synth_velocity(const lognormal::LognormalSequence& seq, double t_start, double rate_hz,
                                         std::size_t n, std::optional<double> noise_snr_db = {},
                                         std::uint64_t seed = 0);

/// Signed lognormal component of an aperture trajectory: the aperture moves
/// by sign * D following the lognormal CDF.
struct ApertureStroke {
    lognormal::LognormalComponent shape;
    double sign = 1.0;
};

/// Aperture position sum_k sign_k D_k Phi((ln(t - t0_k) - mu_k) / sigma_k)
/// sampled at t_start + i / rate_hz.
std::vector<double> aperture_trajectory(const std::vector<ApertureStroke>& strokes, double t_start, double rate_hz,
                                        std::size_t n);

/// Central second difference times rate^2 (edges copy their neighbour).
std::vector<double> second_difference(const std::vector<double>& x, double rate_hz);

/// Regular opening/closing cycle: strokes of identical (mu, sigma, D)
/// alternating sign every `half_period_s`, as z acceleration.
std::vector<double> operculum_cycle_acceleration(double rate_hz, double duration_s, double mu, double sigma,
                                                 double D, double half_period_s);

struct SubjectDraw {
    double activity_mesor = 0.0;
    double respiration_mesor = 0.0;
    double body_weight_g = 0.0;
};

/// Per-subject mesors and weight. Heavier subjects get lower activity and
/// higher respiration mesors.
SubjectDraw draw_subject(const SpeciesProfile& profile, std::uint64_t seed);

struct SessionSpec {
    TimePoint start_utc{};
    double duration_h = 48.0;
    double rate_hz = 100.0;
    std::uint64_t seed = 0;
    std::string device_id = "synthetic";
    double activity_scale = 0.05;
};

/// Tri-axial recording: z carries a breathing aperture model whose cycle
/// rate follows the respiration cosinor, x/y carry tail-beat bursts whose
/// jerk RMS follows activity / activity_scale, plus gravity offsets and
/// white sensor noise.
ingest::Recording synth_accel_session(const SpeciesProfile& profile, const SessionSpec& spec);

/// Same, with explicit subject parameters instead of a seeded draw.
ingest::Recording synth_accel_session(const SpeciesProfile& profile, const SubjectDraw& subject,
                                      const SessionSpec& spec);

/// Cosinor curve sampled every step_s seconds over duration_h hours, plus
/// Gaussian noise.
rhythm::MetricSeries synth_metric_series(const CosinorTarget& target, TimePoint start, double step_s,
                                         double duration_h, double noise_sd, std::uint64_t seed,
                                         rhythm::Metric metric = rhythm::Metric::activity,
                                         std::string subject = "synthetic");

} // namespace operkit::synth
