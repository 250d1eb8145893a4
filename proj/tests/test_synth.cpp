#include "operkit/error.hpp"
#include "operkit/extraction.hpp"
#include "operkit/pipeline.hpp"
#include "operkit/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace operkit;
using namespace operkit::synth;

namespace {

const lognormal::LognormalSequence kSeq({{0.2, 0.3, -0.5, 0.09}, {0.6, 0.25, -0.45, 0.1}});

std::vector<pipeline::SubjectWindows> one_subject(const SpeciesProfile& p, double hours, double rate,
                                                  std::uint64_t seed)
{
    SessionSpec spec;
    spec.start_utc = parse_iso8601("2019-06-01T07:00:00Z");
    spec.duration_h = hours;
    spec.rate_hz = rate;
    spec.seed = seed;
    const auto rows = pipeline::run_monitor(synth_accel_session(p, spec), pipeline::PipelineConfig{});
    return {{"fish", rows}};
}

} // namespace

TEST_CASE("synth_velocity")
{
    SUBCASE("empty sequence without noise")
    {
        const auto v = synth_velocity(lognormal::LognormalSequence{}, 0.0, 100.0, 64);
        for (double x : v.values) {
            CHECK(x == 0.0);
        }
    }
    SUBCASE("noise off equals the model")
    {
        const auto v = synth_velocity(kSeq, 0.0, 100.0, 300);
        CHECK(v.values == lognormal::eval_sequence(kSeq, 0.0, 100.0, 300).values);
    }
    SUBCASE("30 dB noise measures as 30 dB")
    {
        std::vector<lognormal::LognormalComponent> many;
        for (int i = 0; i < 200; ++i) {
            many.push_back({0.4 * i, 0.3, -0.5, 0.09});
        }
        const lognormal::LognormalSequence seq(many);
        const std::size_t n = 8100;
        const auto clean = lognormal::eval_sequence(seq, 0.0, 100.0, n);
        const auto noisy = synth_velocity(seq, 0.0, 100.0, n, 30.0, 42);
        CHECK(extraction::reconstruction_snr(clean.values, noisy.values) == doctest::Approx(30.0).epsilon(0.5 / 30.0));
    }
    SUBCASE("fixed seed is reproducible")
    {
        CHECK(synth_velocity(kSeq, 0.0, 100.0, 300, 20.0, 7).values ==
              synth_velocity(kSeq, 0.0, 100.0, 300, 20.0, 7).values);
        CHECK(synth_velocity(kSeq, 0.0, 100.0, 300, 20.0, 7).values !=
              synth_velocity(kSeq, 0.0, 100.0, 300, 20.0, 8).values);
    }
}

TEST_CASE("aperture model")
{
    SUBCASE("strokes settle to their full amplitude")
    {
        const std::vector<ApertureStroke> strokes{{{0.0, 0.02, -0.5, 0.09}, 1.0}};
        const auto pos = aperture_trajectory(strokes, 0.0, 100.0, 400);
        CHECK(pos.front() == 0.0);
        CHECK(pos.back() == doctest::Approx(0.02).epsilon(1e-12));
        for (std::size_t i = 1; i < pos.size(); ++i) {
            CHECK(pos[i] >= pos[i - 1]);
        }
    }
    SUBCASE("opening and closing cancel")
    {
        const std::vector<ApertureStroke> strokes{{{0.0, 0.02, -0.5, 0.09}, 1.0}, {{0.35, 0.02, -0.5, 0.09}, -1.0}};
        const auto pos = aperture_trajectory(strokes, 0.0, 100.0, 400);
        CHECK(std::abs(pos.back()) < 1e-15);
    }
    SUBCASE("second difference of a parabola")
    {
        std::vector<double> x(50);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double t = static_cast<double>(i) / 10.0;
            x[i] = 1.5 * t * t - t + 2.0;
        }
        for (double a : second_difference(x, 10.0)) {
            CHECK(a == doctest::Approx(3.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("generated sessions satisfy recording invariants")
{
    SessionSpec spec;
    spec.duration_h = 0.5;
    spec.rate_hz = 50.0;
    spec.seed = 4;
    const auto rec = synth_accel_session(sea_bream_profile(), spec);
    CHECK(rec.size() == 90000);
    CHECK(rec.rate_hz() == 50.0);
    CHECK(rec.session().species == "sea_bream");
    CHECK(rec.session().body_weight_g.has_value());
    const auto again = synth_accel_session(sea_bream_profile(), spec);
    CHECK(again == rec);
}

TEST_CASE("zero amplitudes give flat window metrics")
{
    auto p = sea_bream_profile();
    p.activity.amplitude = 0.0;
    p.respiration.amplitude = 0.0;
    const auto subject = one_subject(p, 6.0, 20.0, 2);
    double lo_a = 1e9;
    double hi_a = 0.0;
    double lo_r = 1e9;
    double hi_r = 0.0;
    for (const auto& r : subject.front().rows) {
        lo_a = std::min(lo_a, r.activity_index);
        hi_a = std::max(hi_a, r.activity_index);
        lo_r = std::min(lo_r, r.resp_freq_hz);
        hi_r = std::max(hi_r, r.resp_freq_hz);
    }
    // Residual spread comes only from burst timing and breathing jitter.
    CHECK(hi_a - lo_a < 0.1 * p.activity.mesor);
    CHECK(hi_r - lo_r < 0.05 * p.respiration.mesor);
}

TEST_CASE("species profiles drive the activity-respiration coupling")
{
    const auto bream = one_subject(sea_bream_profile(), 24.0, 20.0, 11);
    const auto bass = one_subject(sea_bass_profile(), 24.0, 20.0, 12);
    auto r_of = [](const std::vector<pipeline::SubjectWindows>& s) {
        return rhythm::coupling_correlation(pipeline::series_from_windows(s.front(), rhythm::Metric::activity),
                                            pipeline::series_from_windows(s.front(), rhythm::Metric::respiration))
            .statistic;
    };
    CHECK(r_of(bream) > 0.5);
    CHECK(r_of(bass) < -0.3);
}

TEST_CASE("subject draws")
{
    const auto p = sea_bass_profile();
    CHECK(draw_subject(p, 3).activity_mesor == draw_subject(p, 3).activity_mesor);
    auto fixed = p;
    fixed.activity_mesor_sd = 0.0;
    fixed.respiration_mesor_sd = 0.0;
    CHECK(draw_subject(fixed, 9).activity_mesor == p.activity.mesor);
    CHECK(draw_subject(fixed, 9).respiration_mesor == p.respiration.mesor);
    CHECK_THROWS_AS(profile_by_name("trout"), InputError);
    CHECK(profile_json(p, 5).find("\"seed\": 5") != std::string::npos);
}
