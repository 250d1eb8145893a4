#include "helpers.hpp"

#include "operkit/error.hpp"
#include "operkit/ingest.hpp"

#include <doctest.h>

#include <cstdint>
#include <random>
#include <sstream>

using namespace operkit;
using namespace operkit::ingest;

namespace {

std::string aefb_bytes(std::uint8_t version, std::uint16_t rate, std::uint32_t declared, std::size_t triplets)
{
    std::string out = "AEFB";
    out.push_back(static_cast<char>(version));
    out.push_back(static_cast<char>(rate & 0xff));
    out.push_back(static_cast<char>(rate >> 8));
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<char>((declared >> (8 * b)) & 0xff));
    }
    for (std::size_t i = 0; i < triplets * 3; ++i) {
        const auto v = static_cast<std::int16_t>(static_cast<int>(i % 200) - 100);
        out.push_back(static_cast<char>(static_cast<std::uint16_t>(v) & 0xff));
        out.push_back(static_cast<char>(static_cast<std::uint16_t>(v) >> 8));
    }
    return out;
}

Recording parse_text(const std::string& text, Format format)
{
    std::istringstream in(text);
    return parse_recording(in, format);
}

} // namespace

TEST_CASE("csv with three rows at 100 Hz")
{
    const auto rec = parse_text("t_s,ax_g,ay_g,az_g\n0,0.1,0.2,0.3\n0.01,0.1,0.2,0.3\n0.02,-1,2,3.5\n", Format::csv);
    CHECK(rec.size() == 3);
    CHECK(rec.rate_hz() == 100.0);
    CHECK(rec.samples()[2].az == 3.5);
}

TEST_CASE("csv of a two-minute capture has 12000 samples")
{
    std::string text = "t_s,ax_g,ay_g,az_g\n";
    for (int i = 0; i < 12000; ++i) {
        text += std::to_string(i / 100.0) + ",0,0,1\n";
    }
    const auto rec = parse_text(text, Format::csv);
    CHECK(rec.size() == 12000);
    CHECK(rec.rate_hz() == 100.0);
    CHECK(rec.duration_s() == doctest::Approx(120.0));
}

TEST_CASE("csv format violations")
{
    CHECK_THROWS_WITH_AS(parse_text("time,ax,ay,az\n0,0,0,0\n", Format::csv), doctest::Contains("malformed header"),
                         InputError);
    CHECK_THROWS_WITH_AS(parse_text("t_s,ax_g,ay_g,az_g\n0,0,0,0\n0.02,0,0,0\n0.01,0,0,0\n", Format::csv),
                         doctest::Contains("non-monotonic"), InputError);
    CHECK_THROWS_AS(parse_text("t_s,ax_g,ay_g,az_g\n0,0,0\n", Format::csv), InputError);
    CHECK_THROWS_AS(parse_text("t_s,ax_g,ay_g,az_g\n0,0,x,0\n0.01,0,0,0\n", Format::csv), InputError);
    CHECK_THROWS_AS(parse_text("t_s,ax_g,ay_g,az_g\n0,0,0,0\n0.01,0,0,0\n0.03,0,0,0\n", Format::csv), InputError);
}

TEST_CASE("aefb declared count must match the payload")
{
    const auto good = aefb_bytes(1, 100, 12000, 12000);
    CHECK(parse_text(good, Format::aefb).size() == 12000);
    CHECK_THROWS_WITH_AS(parse_text(aefb_bytes(1, 100, 12000, 11999), Format::aefb),
                         doctest::Contains("sample-count mismatch"), InputError);
}

TEST_CASE("aefb header validation")
{
    CHECK_THROWS_WITH_AS(parse_text(aefb_bytes(2, 100, 1, 1), Format::aefb),
                         doctest::Contains("unknown format version"), InputError);
    auto bad_magic = aefb_bytes(1, 100, 1, 1);
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(parse_text(bad_magic, Format::aefb), doctest::Contains("malformed header"), InputError);
    CHECK_THROWS_AS(parse_text("AEF", Format::aefb), InputError);
}

TEST_CASE("aefb scaling is 4096 LSB per g")
{
    const auto rec = parse_text(aefb_bytes(1, 50, 2, 2), Format::aefb);
    CHECK(rec.rate_hz() == 50.0);
    CHECK(rec.samples()[0].ax == -100.0 / 4096.0);
    CHECK(rec.samples()[1].t == 1.0 / 50.0);
}

TEST_CASE("recording invariants are enforced")
{
    CHECK_THROWS(Recording({{0.0, 0, 0, 0}, {0.02, 0, 0, 0}}, 100.0));
    CHECK_THROWS(Recording({{0.0, 0, 0, 0}}, 0.0));
    CHECK_THROWS(Recording({{0.0, INFINITY, 0, 0}}, 100.0));
    CHECK_NOTHROW(Recording({{0.0, 0, 0, 0}, {0.01, 0, 0, 0}}, 100.0));
}

TEST_CASE("serialization round trip")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> lsb(-20000, 20000);
    std::vector<Sample> s;
    for (int i = 0; i < 500; ++i) {
        s.push_back({i / 100.0, lsb(rng) / 4096.0, lsb(rng) / 4096.0, lsb(rng) / 4096.0});
    }
    const Recording rec(std::move(s), 100.0);
    for (const auto format : {Format::csv, Format::aefb}) {
        std::stringstream buf;
        emit_recording(buf, rec, format);
        const auto back = parse_recording(buf, format);
        CHECK(back == rec);
    }
}

TEST_CASE("clock drift correction")
{
    const auto rec = testing::constant_recording(1.0, 172801);
    SUBCASE("identity")
    {
        const auto out = correct_clock_drift(rec, DriftModel(0.0, 0.0));
        CHECK(out == rec);
    }
    SUBCASE("100 ppm over 48 h")
    {
        const auto out = correct_clock_drift(rec, DriftModel(100.0, 0.0));
        const double expected_shift = 172800.0 * 100.0 * 1e-6;
        CHECK(out.samples().back().t - rec.samples().back().t == doctest::Approx(expected_shift).epsilon(1e-12));
        CHECK(out.rate_hz() == doctest::Approx(1.0 / (1.0 + 1e-4)));
    }
    SUBCASE("offset translates")
    {
        const auto out = correct_clock_drift(rec, DriftModel(0.0, 5.0));
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(out.samples()[i].t == rec.samples()[i].t + 5.0);
        }
        CHECK(out.rate_hz() == rec.rate_hz());
    }
    SUBCASE("large negative drift keeps order")
    {
        const auto out = correct_clock_drift(rec, DriftModel(-9999.0, -3.0));
        for (std::size_t i = 1; i < out.size(); i += 997) {
            CHECK(out.samples()[i].t > out.samples()[i - 1].t);
        }
    }
    CHECK_THROWS_AS(DriftModel(10000.0, 0.0), PreconditionError);
    CHECK_THROWS_AS(DriftModel(0.0, NAN), PreconditionError);
}

TEST_CASE("window slicing")
{
    SUBCASE("48 h at 15 min gives 192 windows")
    {
        const auto rec = testing::constant_recording(1.0, 172800);
        const auto w = slice_windows(rec, {900.0, 120.0});
        CHECK(w.size() == static_cast<std::size_t>(172800 / 900));
        for (std::size_t k = 0; k < w.size(); ++k) {
            CHECK(w[k].start_s == 900.0 * static_cast<double>(k));
            CHECK(w[k].samples.size() == 120);
            CHECK(w[k].samples.back().t < rec.end_s());
            if (k > 0) {
                CHECK(w[k].samples.front().t >= w[k - 1].start_s + w[k - 1].duration_s);
            }
        }
    }
    SUBCASE("2700 s gives windows at 0, 900, 1800")
    {
        const auto rec = testing::constant_recording(10.0, 27000);
        const auto w = slice_windows(rec, {900.0, 120.0});
        REQUIRE(w.size() == 3);
        CHECK(w[0].start_s == 0.0);
        CHECK(w[1].start_s == 900.0);
        CHECK(w[2].start_s == 1800.0);
        CHECK(w[2].samples.size() == 1200);
        CHECK(w[2].samples.front().t == doctest::Approx(1800.0));
    }
    SUBCASE("recording shorter than one window")
    {
        const auto rec = testing::constant_recording(10.0, 1199);
        CHECK(slice_windows(rec, {900.0, 120.0}).empty());
    }
    SUBCASE("duration longer than period")
    {
        const auto rec = testing::constant_recording(10.0, 100);
        CHECK_THROWS_AS(slice_windows(rec, {60.0, 120.0}), PreconditionError);
    }
}

TEST_CASE("session sidecar round trip")
{
    SessionSidecar sc;
    sc.session.device_id = "dev-7";
    sc.session.species = "sea_bass";
    sc.session.body_weight_g = 645.1;
    sc.session.start_utc = parse_iso8601("2019-06-01T12:00:00Z");
    sc.drift = DriftModel(12.5, -0.25);
    const auto text = session_sidecar_json(sc);
    CHECK(parse_session_sidecar(text) == sc);
    CHECK(session_sidecar_json(parse_session_sidecar(text)) == text);
    CHECK_THROWS_AS(parse_session_sidecar("{\"species\": 3}"), InputError);
}

TEST_CASE("iso 8601 timestamps")
{
    const auto t = parse_iso8601("2019-06-01T18:04:00Z");
    CHECK(format_iso8601(t) == "2019-06-01T18:04:00Z");
    CHECK(format_iso8601(add_seconds(t, 0.25)) == "2019-06-01T18:04:00.250Z");
    CHECK(seconds_of_day(t) == 18 * 3600 + 4 * 60);
    CHECK(format_hhmm(18.0 + 4.0 / 60.0) == "18:04");
    CHECK(format_hhmm(24.0) == "00:00");
    CHECK(parse_hhmm("07:30") == 450);
    CHECK_THROWS_AS(parse_iso8601("2019-13-01T00:00:00Z"), InputError);
}
