#include "operkit/error.hpp"
#include "operkit/rhythm.hpp"
#include "operkit/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace operkit;
using namespace operkit::rhythm;

namespace {

const TimePoint kMidLight = parse_iso8601("2019-06-01T12:00:00Z");
const TimePoint kMidnight = parse_iso8601("2019-06-01T00:00:00Z");
const Photoperiod kLight(7 * 60, 19 * 60);
const synth::CosinorTarget kBassResp{1.57, 0.30, 18.0 + 4.0 / 60.0};

double circular_hours(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 24.0);
    return std::min(d, 24.0 - d);
}

MetricSeries shifted(const MetricSeries& s, double hours)
{
    std::vector<MetricPoint> pts;
    for (const auto& p : s.points()) {
        pts.push_back({add_seconds(p.t, hours * 3600.0), p.value});
    }
    return MetricSeries(std::move(pts), s.metric(), s.subject());
}

MetricSeries mapped(const MetricSeries& s, double c, double d)
{
    std::vector<MetricPoint> pts;
    for (const auto& p : s.points()) {
        pts.push_back({p.t, c * p.value + d});
    }
    return MetricSeries(std::move(pts), s.metric(), s.subject());
}

} // namespace

TEST_CASE("constant series")
{
    const auto s = synth::synth_metric_series({2.5, 0.0, 0.0}, kMidLight, 900.0, 48.0, 0.0, 1);
    const auto fit = cosinor_fit(s);
    CHECK(fit.mesor == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(fit.amplitude < 1e-12);
}

TEST_CASE("noiseless recovery")
{
    const auto s = synth::synth_metric_series(kBassResp, kMidLight, 900.0, 48.0, 0.0, 1, Metric::respiration);
    CHECK(s.size() == 192);
    const auto fit = cosinor_fit(s);
    CHECK(std::abs(fit.mesor - 1.57) < 1e-9);
    CHECK(std::abs(fit.amplitude - 0.30) < 1e-9);
    CHECK(circular_hours(fit.acrophase_h, kBassResp.acrophase_h) < 1e-9);
    CHECK(fit.acrophase_hhmm() == "18:04");
    CHECK(fit.acrophase_rad == doctest::Approx(kBassResp.acrophase_h / 24.0 * 2.0 * std::numbers::pi));
    CHECK(fit.rss < 1e-20);
    CHECK(fit.n == 192);
}

TEST_CASE("noisy recovery over 100 seeded trials")
{
    int phase_ok = 0;
    int amp_ok = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto s = synth::synth_metric_series(kBassResp, kMidLight, 900.0, 48.0, 0.1 * kBassResp.amplitude, seed);
        const auto fit = cosinor_fit(s);
        phase_ok += circular_hours(fit.acrophase_h, kBassResp.acrophase_h) <= 20.0 / 60.0 ? 1 : 0;
        amp_ok += std::abs(fit.amplitude - kBassResp.amplitude) <= 0.1 * kBassResp.amplitude ? 1 : 0;
    }
    CHECK(phase_ok >= 95);
    CHECK(amp_ok >= 95);
}

TEST_CASE("least-squares properties")
{
    const auto s = synth::synth_metric_series({0.08, 0.01, 12.0}, kMidnight, 900.0, 48.0, 0.004, 77);
    const auto fit = cosinor_fit(s);
    SUBCASE("residuals are orthogonal to the design")
    {
        const double omega = 2.0 * std::numbers::pi / 24.0;
        double r1 = 0.0;
        double rc = 0.0;
        double rs = 0.0;
        double norm = 0.0;
        for (const auto& p : s.points()) {
            const double h = seconds_of_day(p.t) / 3600.0 +
                             24.0 * static_cast<double>((midnight_of(p.t) - kMidnight).count()) / 86'400'000.0;
            const double model = fit.mesor + fit.amplitude * std::cos(omega * h - fit.acrophase_rad);
            const double r = p.value - model;
            r1 += r;
            rc += r * std::cos(omega * h);
            rs += r * std::sin(omega * h);
            norm += p.value * p.value;
        }
        norm = std::sqrt(norm);
        CHECK(std::abs(r1) < 1e-9 * norm);
        CHECK(std::abs(rc) < 1e-9 * norm);
        CHECK(std::abs(rs) < 1e-9 * norm);
    }
    SUBCASE("mesor equals the sample mean over whole periods")
    {
        double mean = 0.0;
        for (const auto& p : s.points()) {
            mean += p.value;
        }
        mean /= static_cast<double>(s.size());
        CHECK(std::abs(fit.mesor - mean) < 1e-9);
    }
    SUBCASE("time shifts move only the acrophase")
    {
        for (double shift : {1.5, 7.25, -3.0}) {
            const auto f2 = cosinor_fit(shifted(s, shift));
            CHECK(f2.mesor == doctest::Approx(fit.mesor).epsilon(1e-9));
            CHECK(f2.amplitude == doctest::Approx(fit.amplitude).epsilon(1e-9));
            CHECK(circular_hours(f2.acrophase_h, fit.acrophase_h + shift) < 1e-9);
        }
    }
    SUBCASE("affine maps of the values")
    {
        const auto f2 = cosinor_fit(mapped(s, 3.0, -1.0));
        CHECK(f2.amplitude == doctest::Approx(3.0 * fit.amplitude).epsilon(1e-9));
        CHECK(f2.mesor == doctest::Approx(3.0 * fit.mesor - 1.0).epsilon(1e-9));
        CHECK(circular_hours(f2.acrophase_h, fit.acrophase_h) < 1e-9);
    }
}

TEST_CASE("cosinor preconditions")
{
    const auto s = synth::synth_metric_series(kBassResp, kMidLight, 900.0, 20.0, 0.0, 1);
    CHECK_THROWS_WITH_AS(cosinor_fit(s), doctest::Contains("insufficient span"), PreconditionError);
    const auto few = synth::synth_metric_series(kBassResp, kMidLight, 8.0 * 3600.0, 24.0, 0.0, 1);
    CHECK_THROWS_AS(cosinor_fit(few), PreconditionError);
    // Daily samples all sit at the same phase.
    const auto same_phase = synth::synth_metric_series(kBassResp, kMidLight, 86400.0, 24.0 * 6, 0.0, 1);
    CHECK_THROWS_WITH_AS(cosinor_fit(same_phase), doctest::Contains("singular"), PreconditionError);
}

TEST_CASE("trim_partial_phases")
{
    SUBCASE("aligned series is unchanged")
    {
        const auto s = synth::synth_metric_series(kBassResp, parse_iso8601("2019-06-01T07:00:00Z"), 900.0, 24.0, 0.0, 1);
        CHECK(trim_partial_phases(s, kLight).points() == s.points());
    }
    SUBCASE("48 h from mid-light keeps two dark and one light phase")
    {
        const auto s = synth::synth_metric_series(kBassResp, kMidLight, 900.0, 48.0, 0.0, 1);
        const auto t = trim_partial_phases(s, kLight);
        CHECK(format_iso8601(t.points().front().t) == "2019-06-01T19:00:00Z");
        CHECK(format_iso8601(t.points().back().t) == "2019-06-03T06:45:00Z");
        CHECK(t.size() == 36 * 4);
        int dark_to_light = 0;
        int light_to_dark = 0;
        for (std::size_t i = 1; i < t.size(); ++i) {
            const bool a = kLight.is_dark(t.points()[i - 1].t);
            const bool b = kLight.is_dark(t.points()[i].t);
            dark_to_light += (a && !b) ? 1 : 0;
            light_to_dark += (!a && b) ? 1 : 0;
        }
        CHECK(kLight.is_dark(t.points().front().t));
        CHECK(kLight.is_dark(t.points().back().t));
        CHECK(dark_to_light == 1);
        CHECK(light_to_dark == 1);
    }
    SUBCASE("series inside one partial phase")
    {
        const auto s = synth::synth_metric_series(kBassResp, kMidLight, 900.0, 3.0, 0.0, 1);
        CHECK_THROWS_AS(trim_partial_phases(s, kLight), PreconditionError);
    }
}

TEST_CASE("daily profile")
{
    SUBCASE("constant input")
    {
        const std::vector<MetricSeries> s{synth::synth_metric_series({4.0, 0.0, 0.0}, kMidnight, 900.0, 48.0, 0.0, 1)};
        const auto p = daily_profile(s, 15, &kLight);
        CHECK(p.bins.size() == 96);
        CHECK(p.p20 == 4.0);
        CHECK(p.p80 == 4.0);
    }
    SUBCASE("cosine is reproduced bin by bin")
    {
        const synth::CosinorTarget target{1.0, 0.5, 9.5};
        const std::vector<MetricSeries> s{synth::synth_metric_series(target, kMidnight, 900.0, 48.0, 0.0, 1)};
        const auto p = daily_profile(s);
        for (const auto& bin : p.bins) {
            CHECK(std::abs(bin.mean - target.at_clock_hours(bin.clock_minute / 60.0)) < 1e-6);
            CHECK(bin.count == 2);
        }
    }
    SUBCASE("opposite phases cancel")
    {
        const std::vector<MetricSeries> s{synth::synth_metric_series({1.0, 0.3, 6.0}, kMidnight, 900.0, 24.0, 0.0, 1),
                                          synth::synth_metric_series({1.0, 0.3, 18.0}, kMidnight, 900.0, 24.0, 0.0, 2)};
        const auto p = daily_profile(s);
        for (const auto& bin : p.bins) {
            CHECK(std::abs(bin.mean - 1.0) < 1e-12);
        }
    }
    SUBCASE("percentiles interpolate between order statistics")
    {
        CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.2) == doctest::Approx(1.8));
        CHECK(percentile({5.0, 1.0, 3.0}, 0.8) == doctest::Approx(4.2));
    }
    SUBCASE("csv layout")
    {
        const std::vector<MetricSeries> s{synth::synth_metric_series({4.0, 0.0, 0.0}, kMidnight, 900.0, 24.0, 0.0, 1)};
        const auto csv = profile_csv(daily_profile(s, 15, &kLight));
        CHECK(csv.rfind("clock_hhmm,mean,p20,p80,dark_flag\n00:00,4,4,4,1\n", 0) == 0);
        CHECK(csv.find("\n07:00,4,4,4,0\n") != std::string::npos);
        CHECK(csv.find("\n19:00,4,4,4,1\n") != std::string::npos);
    }
    CHECK_THROWS_AS(daily_profile(std::vector<MetricSeries>{}), PreconditionError);
}

TEST_CASE("coupling correlation")
{
    const auto a = synth::synth_metric_series({1.0, 0.3, 6.0}, kMidnight, 900.0, 48.0, 0.0, 1);
    CHECK(coupling_correlation(a, a).statistic == doctest::Approx(1.0));
    const auto anti = synth::synth_metric_series({1.0, 0.3, 18.0}, kMidnight, 900.0, 48.0, 0.0, 1);
    CHECK(coupling_correlation(a, anti).statistic == doctest::Approx(-1.0));
    const auto bass = synth::sea_bass_profile();
    const auto act = synth::synth_metric_series(bass.activity, kMidLight, 900.0, 48.0, 0.003, 4);
    const auto resp = synth::synth_metric_series(bass.respiration, kMidLight, 900.0, 48.0, 0.04, 5,
                                                 Metric::respiration);
    CHECK(coupling_correlation(act, resp).statistic < 0.0);
    const auto disjoint = shifted(a, 0.1);
    CHECK_THROWS_AS(coupling_correlation(a, disjoint), PreconditionError);
}

TEST_CASE("consensus series averages aligned subjects")
{
    const auto a = synth::synth_metric_series({1.0, 0.3, 6.0}, kMidnight, 900.0, 24.0, 0.0, 1);
    const auto b = synth::synth_metric_series({3.0, 0.3, 6.0}, kMidnight, 900.0, 24.0, 0.0, 1);
    const std::vector<MetricSeries> both{a, b};
    const auto c = consensus_series(both);
    REQUIRE(c.size() == a.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c.points()[i].value == doctest::Approx(0.5 * (a.points()[i].value + b.points()[i].value)));
    }
}

TEST_CASE("synthetic metric series")
{
    const auto flat = synth::synth_metric_series({2.0, 0.0, 3.0}, kMidnight, 900.0, 48.0, 0.0, 1);
    for (const auto& p : flat.points()) {
        CHECK(p.value == 2.0);
    }
    const auto s = synth::synth_metric_series(kBassResp, kMidnight, 900.0, 48.0, 0.0, 1);
    const auto best = std::max_element(s.points().begin(), s.points().end(),
                                       [](const MetricPoint& x, const MetricPoint& y) { return x.value < y.value; });
    const double clock_h = seconds_of_day(best->t) / 3600.0;
    CHECK(clock_h >= 18.0);
    CHECK(clock_h < 18.25);
    CHECK(synth::synth_metric_series(kBassResp, kMidnight, 900.0, 48.0, 0.1, 9).points() ==
          synth::synth_metric_series(kBassResp, kMidnight, 900.0, 48.0, 0.1, 9).points());
}

TEST_CASE("metric series invariants")
{
    const auto t = parse_iso8601("2019-06-01T00:00:00Z");
    CHECK_THROWS_AS(MetricSeries({{t, 1.0}, {t, 2.0}}, Metric::activity, "x"), PreconditionError);
    CHECK_THROWS_AS(MetricSeries({{t, NAN}}, Metric::activity, "x"), PreconditionError);
    CHECK_THROWS_AS(Photoperiod(60, 60), PreconditionError);
}
