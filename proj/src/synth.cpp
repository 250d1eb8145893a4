#include "operkit/synth.hpp"

#include "operkit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace operkit::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Breathing stroke shape and size.
constexpr double kBreathSigma = 0.093;
constexpr double kBreathD = 0.005;
constexpr double kBreathPeriodJitter = 0.02;

// Tail-beat bursts.
constexpr double kBurstPeriodS = 4.0;
constexpr double kBurstLengthS = 2.0;
constexpr double kBurstJitterS = 0.5;
constexpr double kBurstFreqLow = 1.5;
constexpr double kBurstFreqHigh = 2.5;
constexpr double kBurstYRatio = 0.6;

constexpr double kGravityX = 0.05;
constexpr double kGravityY = -0.03;
constexpr double kGravityZ = 0.98;
constexpr double kSensorNoiseG = 0.001;

double std_normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double clock_hours(TimePoint start, double t_s)
{
    return seconds_of_day(start) / 3600.0 + t_s / 3600.0;
}

} // namespace

double CosinorTarget::at_clock_hours(double clock_h, double period_h) const
{
    return mesor + amplitude * std::cos(kTwoPi * (clock_h - acrophase_h) / period_h);
}

void SpeciesProfile::validate() const
{
    for (const auto* target : {&activity, &respiration}) {
        if (!(target->mesor > 0.0) || !(target->amplitude >= 0.0) || !std::isfinite(target->acrophase_h)) {
            throw PreconditionError("species profile needs positive mesors and nonnegative amplitudes");
        }
    }
    if (!(activity_mesor_sd >= 0.0) || !(respiration_mesor_sd >= 0.0) || !(body_weight_sd_g >= 0.0)) {
        throw PreconditionError("species profile spreads must be nonnegative");
    }
}

SpeciesProfile sea_bream_profile()
{
    SpeciesProfile p;
    p.name = "sea_bream";
    p.activity = {0.080, 0.010, 12.0};
    p.respiration = {1.73, 0.10, 12.5};
    p.activity_mesor_sd = 0.006;
    p.respiration_mesor_sd = 0.04;
    p.body_weight_mean_g = 917.0;
    p.body_weight_sd_g = 37.2;
    return p;
}

SpeciesProfile sea_bass_profile()
{
    SpeciesProfile p;
    p.name = "sea_bass";
    p.activity = {0.057, 0.015, 8.0};
    p.respiration = {1.57, 0.20, 18.0 + 4.0 / 60.0};
    p.activity_mesor_sd = 0.002;
    p.respiration_mesor_sd = 0.04;
    p.body_weight_mean_g = 645.1;
    p.body_weight_sd_g = 49.3;
    return p;
}

SpeciesProfile profile_by_name(std::string_view name)
{
    if (name == "sea_bream") {
        return sea_bream_profile();
    }
    if (name == "sea_bass") {
        return sea_bass_profile();
    }
    throw InputError("unknown species profile '" + std::string(name) + "' (expected sea_bream or sea_bass)");
}

std::string profile_json(const SpeciesProfile& profile, std::uint64_t seed)
{
    auto target = [](const CosinorTarget& t) {
        nlohmann::ordered_json j;
        j["mesor"] = t.mesor;
        j["amplitude"] = t.amplitude;
        j["acrophase_h"] = t.acrophase_h;
        return j;
    };
    nlohmann::ordered_json j;
    j["name"] = profile.name;
    j["seed"] = seed;
    j["activity"] = target(profile.activity);
    j["respiration"] = target(profile.respiration);
    j["activity_mesor_sd"] = profile.activity_mesor_sd;
    j["respiration_mesor_sd"] = profile.respiration_mesor_sd;
    j["body_weight_mean_g"] = profile.body_weight_mean_g;
    j["body_weight_sd_g"] = profile.body_weight_sd_g;
    return j.dump(2) + "\n";
}

kinematics::VelocityTrace synth_velocity(const lognormal::LognormalSequence& seq, double t_start, double rate_hz,
                                         std::size_t n, std::optional<double> noise_snr_db, std::uint64_t seed)
{
    auto trace = lognormal::eval_sequence(seq, t_start, rate_hz, n);
    if (!noise_snr_db || n == 0) {
        return trace;
    }
    double ss = 0.0;
    for (double v : trace.values) {
        ss += v * v;
    }
    const double rms = std::sqrt(ss / static_cast<double>(n));
    const double noise_sd = rms * std::pow(10.0, -*noise_snr_db / 20.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double& v : trace.values) {
        v += noise_sd * noise(rng);
    }
    return trace;
}

std::vector<double> aperture_trajectory(const std::vector<ApertureStroke>& strokes, double t_start, double rate_hz,
                                        std::size_t n)
{
    std::vector<double> pos(n, 0.0);
    // Settled strokes contribute a constant from their settle index on;
    // accumulated as steps and prefix-summed once.
    std::vector<double> steps(n + 1, 0.0);
    const double t_end = t_start + static_cast<double>(n) / rate_hz;
    for (const auto& stroke : strokes) {
        const auto& c = stroke.shape;
        c.validate();
        if (c.t0 >= t_end) {
            continue;
        }
        const double amount = stroke.sign * c.D;
        // Past +8 sigma the CDF equals 1 to double precision.
        const double settle = c.t0 + std::exp(c.mu + 8.0 * c.sigma);
        const auto first = static_cast<std::size_t>(std::max(0.0, std::floor((c.t0 - t_start) * rate_hz)));
        std::size_t i = first;
        for (; i < n; ++i) {
            const double t = t_start + static_cast<double>(i) / rate_hz;
            if (t <= c.t0) {
                continue;
            }
            if (t >= settle) {
                break;
            }
            pos[i] += amount * std_normal_cdf((std::log(t - c.t0) - c.mu) / c.sigma);
        }
        steps[i] += amount;
    }
    double level = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        level += steps[i];
        pos[i] += level;
    }
    return pos;
}

std::vector<double> second_difference(const std::vector<double>& x, double rate_hz)
{
    std::vector<double> out(x.size(), 0.0);
    if (x.size() < 3) {
        return out;
    }
    const double r2 = rate_hz * rate_hz;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        out[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) * r2;
    }
    out.front() = out[1];
    out.back() = out[out.size() - 2];
    return out;
}

std::vector<double> operculum_cycle_acceleration(double rate_hz, double duration_s, double mu, double sigma,
                                                 double D, double half_period_s)
{
    if (!(half_period_s > 0.0) || !(duration_s > 0.0) || !(rate_hz > 0.0)) {
        throw PreconditionError("operculum cycle needs positive rate, duration and half period");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    std::vector<ApertureStroke> strokes;
    double sign = 1.0;
    for (double t0 = -2.0; t0 < duration_s; t0 += half_period_s) {
        strokes.push_back({{t0, D, mu, sigma}, sign});
        sign = -sign;
    }
    return second_difference(aperture_trajectory(strokes, 0.0, rate_hz, n), rate_hz);
}

SubjectDraw draw_subject(const SpeciesProfile& profile, std::uint64_t seed)
{
    profile.validate();
    std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double weight_z = normal(rng);
    const double e_activity = normal(rng);
    const double e_resp = normal(rng);
    constexpr double kLoading = 0.7;
    const double rest = std::sqrt(1.0 - kLoading * kLoading);
    SubjectDraw d;
    d.body_weight_g = profile.body_weight_mean_g + profile.body_weight_sd_g * weight_z;
    d.activity_mesor = profile.activity.mesor + profile.activity_mesor_sd * (-kLoading * weight_z + rest * e_activity);
    d.respiration_mesor =
        profile.respiration.mesor + profile.respiration_mesor_sd * (kLoading * weight_z + rest * e_resp);
    d.activity_mesor = std::max(d.activity_mesor, 1e-6);
    d.respiration_mesor = std::max(d.respiration_mesor, 1e-3);
    return d;
}

ingest::Recording synth_accel_session(const SpeciesProfile& profile, const SessionSpec& spec)
{
    return synth_accel_session(profile, draw_subject(profile, spec.seed), spec);
}

ingest::Recording synth_accel_session(const SpeciesProfile& profile, const SubjectDraw& subject,
                                      const SessionSpec& spec)
{
    profile.validate();
    if (!(spec.rate_hz > 0.0) || !(spec.duration_h > 0.0) || !(spec.activity_scale > 0.0)) {
        throw PreconditionError("session spec needs positive rate, duration and activity scale");
    }
    const double rate = spec.rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_h * 3600.0 * rate));
    const double duration_s = static_cast<double>(n) / rate;

    CosinorTarget activity = profile.activity;
    activity.mesor = subject.activity_mesor;
    CosinorTarget respiration = profile.respiration;
    respiration.mesor = subject.respiration_mesor;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Breathing: opening and closing strokes tile each cycle; the stroke
    // support (t1..t3) spans exactly one half period.
    std::vector<ApertureStroke> strokes;
    const double support = 2.0 * std::sinh(3.0 * kBreathSigma);
    for (double tc = -1.0; tc < duration_s;) {
        const double f = std::max(0.2, respiration.at_clock_hours(clock_hours(spec.start_utc, tc)) *
                                           (1.0 + kBreathPeriodJitter * normal(rng)));
        const double half = 0.5 / f;
        const double mu = std::log(half / support);
        const double lead = std::exp(mu - 3.0 * kBreathSigma);
        strokes.push_back({{tc - lead, kBreathD, mu, kBreathSigma}, 1.0});
        strokes.push_back({{tc + half - lead, kBreathD, mu, kBreathSigma}, -1.0});
        tc += 2.0 * half;
    }
    const auto az = second_difference(aperture_trajectory(strokes, 0.0, rate, n), rate);
    strokes.clear();
    strokes.shrink_to_fit();

    // Swimming: Hann-windowed tail-beat bursts on x/y. The amplitude is set
    // so the sampled jerk RMS over a burst cycle equals activity/scale.
    std::vector<double> ax(n, 0.0);
    std::vector<double> ay(n, 0.0);
    const double duty = kBurstLengthS / kBurstPeriodS;
    const double env_rate = std::numbers::pi / kBurstLengthS;
    for (double slot = 0.0; slot < duration_s; slot += kBurstPeriodS) {
        const double start = slot + kBurstJitterS * (2.0 * unit(rng) - 1.0);
        const double f = kBurstFreqLow + (kBurstFreqHigh - kBurstFreqLow) * unit(rng);
        const double phase = kTwoPi * unit(rng);
        const double target_jerk =
            activity.at_clock_hours(clock_hours(spec.start_utc, start + 0.5 * kBurstLengthS)) / spec.activity_scale;
        if (!(target_jerk > 0.0)) {
            continue;
        }
        const double omega_eff = 2.0 * rate * std::sin(std::numbers::pi * f / rate);
        const double per_amp_ms =
            duty * (1.0 + kBurstYRatio * kBurstYRatio) * (env_rate * env_rate / 4.0 + 3.0 * omega_eff * omega_eff / 16.0);
        const double amp = target_jerk / std::sqrt(per_amp_ms);
        const auto i0 = static_cast<std::ptrdiff_t>(std::ceil(start * rate));
        const auto i1 = static_cast<std::ptrdiff_t>(std::floor((start + kBurstLengthS) * rate));
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, i0); i <= i1 && i < static_cast<std::ptrdiff_t>(n); ++i) {
            const double t = static_cast<double>(i) / rate;
            const double u = (t - start) / kBurstLengthS;
            const double w = std::sin(std::numbers::pi * u);
            const double env = amp * w * w;
            const double arg = kTwoPi * f * (t - start) + phase;
            ax[static_cast<std::size_t>(i)] += env * std::sin(arg);
            ay[static_cast<std::size_t>(i)] += kBurstYRatio * env * std::cos(arg);
        }
    }

    std::vector<ingest::Sample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        samples[i].t = static_cast<double>(i) / rate;
        samples[i].ax = kGravityX + ax[i] + kSensorNoiseG * normal(rng);
        samples[i].ay = kGravityY + ay[i] + kSensorNoiseG * normal(rng);
        samples[i].az = kGravityZ + az[i] + kSensorNoiseG * normal(rng);
    }

    ingest::SessionInfo info;
    info.device_id = spec.device_id;
    info.species = profile.name;
    info.body_weight_g = subject.body_weight_g;
    info.start_utc = spec.start_utc;
    return ingest::Recording(std::move(samples), rate, std::move(info));
}

rhythm::MetricSeries synth_metric_series(const CosinorTarget& target, TimePoint start, double step_s,
                                         double duration_h, double noise_sd, std::uint64_t seed,
                                         rhythm::Metric metric, std::string subject)
{
    if (!(step_s > 0.0) || !(duration_h > 0.0) || !(noise_sd >= 0.0)) {
        throw PreconditionError("metric series needs positive step and duration, nonnegative noise");
    }
    const auto count = static_cast<std::size_t>(std::llround(duration_h * 3600.0 / step_s));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<rhythm::MetricPoint> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t_s = static_cast<double>(i) * step_s;
        const TimePoint t = add_seconds(start, t_s);
        double value = target.at_clock_hours(seconds_of_day(start) / 3600.0 + t_s / 3600.0);
        if (noise_sd > 0.0) {
            value += noise_sd * noise(rng);
        }
        points.push_back({t, value});
    }
    return rhythm::MetricSeries(std::move(points), metric, std::move(subject));
}

} // namespace operkit::synth
