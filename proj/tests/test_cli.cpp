// Drives the installed command-line binary end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const fs::path& dir, const std::string& args)
{
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + OPERKIT_BIN + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = testing::slurp(out);
    r.err = testing::slurp(err);
    return r;
}

std::string q(const fs::path& p)
{
    return "\"" + p.string() + "\"";
}

// Window CSV with constant values every 15 min from `start` for `hours`.
void write_windows(const fs::path& path, const std::string& day, int hours, double activity, double resp)
{
    std::ofstream f(path);
    f << "window_start_iso8601,activity_index,resp_freq_hz,flags\n";
    for (int k = 0; k < hours * 4; ++k) {
        const int minutes = 7 * 60 + 15 * k;
        const int d = minutes / 1440;
        const int m = minutes % 1440;
        char stamp[32];
        std::snprintf(stamp, sizeof stamp, "%s%02dT%02d:%02d:00Z", day.c_str(), 1 + d, m / 60, m % 60);
        f << stamp << ',' << activity << ',' << resp << ",\n";
    }
}

std::size_t count_lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST_CASE("decompose")
{
    const auto dir = testing::temp_dir("cli_decompose");
    SUBCASE("single synthetic component")
    {
        REQUIRE(run(dir, "--out " + q(dir) + " synth lognormal --component 0.1,0.02,-0.5,0.09 --seconds 2 --name one")
                    .code == 0);
        const auto r = run(dir, "--out " + q(dir / "res") + " decompose " + q(dir / "one.aefb") + " --no-detrend");
        CHECK(r.code == 0);
        CHECK(r.out.find("components: 1\n") != std::string::npos);
        const auto ex = nlohmann::json::parse(testing::slurp(dir / "res" / "extraction.json"));
        CHECK(ex.at("snr_db").get<double>() >= 40.0);
        CHECK(count_lines(testing::slurp(dir / "res" / "components.csv")) == 2);
        CHECK(count_lines(testing::slurp(dir / "res" / "features.csv")) >= 2);
    }
    SUBCASE("zero-signal file")
    {
        std::ofstream f(dir / "zero.csv");
        f << "t_s,ax_g,ay_g,az_g\n";
        for (int i = 0; i < 500; ++i) {
            f << i / 100.0 << ",0,0,0\n";
        }
        f.close();
        const auto r = run(dir, "--out " + q(dir / "zres") + " decompose " + q(dir / "zero.csv"));
        CHECK(r.code == 0);
        CHECK(r.err.find("warning") != std::string::npos);
        CHECK(count_lines(testing::slurp(dir / "zres" / "components.csv")) == 1);
    }
    SUBCASE("missing file")
    {
        const auto r = run(dir, "--out " + q(dir) + " decompose " + q(dir / "absent.aefb"));
        CHECK(r.code == 2);
        CHECK(r.err.find("absent.aefb") != std::string::npos);
    }
}

TEST_CASE("monitor")
{
    const auto dir = testing::temp_dir("cli_monitor");
    SUBCASE("10 min session gives one window")
    {
        REQUIRE(run(dir, "--out " + q(dir) + " synth session --species sea_bream --hours 0.1667 --rate 25").code ==
                0);
        const auto r = run(dir, "--out " + q(dir / "w") + " monitor " + q(dir / "sea_bream_1.aefb"));
        CHECK(r.code == 0);
        const auto csv = testing::slurp(dir / "w" / "sea_bream_1.windows.csv");
        CHECK(count_lines(csv) == 2);
        CHECK(csv.find("2019-06-01T12:00:00Z,") != std::string::npos);
    }
    SUBCASE("48 h session gives 192 windows, independent of threads")
    {
        REQUIRE(run(dir, "--seed 3 --out " + q(dir) + " synth session --species sea_bass --hours 48 --rate 10").code ==
                0);
        const auto input = q(dir / "sea_bass_3.aefb");
        REQUIRE(run(dir, "--out " + q(dir / "t1") + " monitor " + input + " --threads 1").code == 0);
        REQUIRE(run(dir, "--out " + q(dir / "t4") + " monitor " + input + " --threads 4").code == 0);
        const auto a = testing::slurp(dir / "t1" / "sea_bass_3.windows.csv");
        CHECK(count_lines(a) == 193);
        CHECK(a == testing::slurp(dir / "t4" / "sea_bass_3.windows.csv"));
    }
    SUBCASE("corrupted AEFB")
    {
        REQUIRE(run(dir, "--out " + q(dir) + " synth session --species sea_bream --hours 0.05 --rate 25").code == 0);
        auto bytes = testing::slurp(dir / "sea_bream_1.aefb");
        bytes.resize(bytes.size() - 3);
        std::ofstream(dir / "sea_bream_1.aefb", std::ios::binary) << bytes;
        const auto r = run(dir, "--out " + q(dir / "w") + " monitor " + q(dir / "sea_bream_1.aefb"));
        CHECK(r.code == 2);
        CHECK_FALSE(r.err.empty());
    }
}

TEST_CASE("rhythm")
{
    const auto dir = testing::temp_dir("cli_rhythm");
    SUBCASE("constant subject has no amplitude")
    {
        write_windows(dir / "flat.windows.csv", "2019-06-", 48, 0.05, 1.5);
        const auto r = run(dir, "--out " + q(dir / "r") + " rhythm " + q(dir / "flat.windows.csv") + " --label g");
        CHECK(r.code == 0);
        const auto rep = nlohmann::json::parse(testing::slurp(dir / "r" / "rhythm_report.json"));
        REQUIRE(rep.at("fits").size() == 2);
        for (const auto& fit : rep.at("fits")) {
            CHECK(fit.at("amplitude").get<double>() < 1e-9);
            CHECK(fit.at("subject") == "flat");
        }
        CHECK(fs::exists(dir / "r" / "profile_activity.csv"));
        CHECK(fs::exists(dir / "r" / "profile_respiration.csv"));
    }
    SUBCASE("short series")
    {
        write_windows(dir / "short.windows.csv", "2019-06-", 20, 0.05, 1.5);
        const auto r = run(dir, "--out " + q(dir / "r") + " rhythm " + q(dir / "short.windows.csv"));
        CHECK(r.code == 3);
        CHECK(r.err.find("insufficient span") != std::string::npos);
    }
}

TEST_CASE("compare")
{
    const auto dir = testing::temp_dir("cli_compare");
    std::string inputs;
    for (int i = 0; i < 4; ++i) {
        const auto path = dir / ("f" + std::to_string(i) + ".windows.csv");
        write_windows(path, "2019-06-", 48, 0.05 + 0.01 * i, 1.5 + 0.02 * i);
        inputs += " " + q(path);
    }
    REQUIRE(run(dir, "--out " + q(dir / "a") + " rhythm" + inputs + " --label a").code == 0);
    const auto report = q(dir / "a" / "rhythm_report.json");

    SUBCASE("a group against itself")
    {
        const auto r = run(dir, "--out " + q(dir / "c") + " compare " + report + " " + report);
        CHECK(r.code == 0);
        CHECK(r.err.find("Pearson rows omitted") != std::string::npos);
        std::istringstream rows(testing::slurp(dir / "c" / "comparison.csv"));
        std::string line;
        std::getline(rows, line);
        int n = 0;
        while (std::getline(rows, line)) {
            const double p = std::stod(line.substr(line.rfind(',') + 1));
            CHECK(p == doctest::Approx(1.0).epsilon(1e-9));
            ++n;
        }
        CHECK(n == 4);
    }
    SUBCASE("weights add Pearson rows")
    {
        std::ofstream(dir / "w.csv") << "subject,body_weight_g\nf0,900\nf1,880\nf2,860\nf3,850\n";
        const auto r =
            run(dir, "--out " + q(dir / "c") + " compare " + report + " " + report + " --weights " + q(dir / "w.csv"));
        CHECK(r.code == 0);
        const auto csv = testing::slurp(dir / "c" / "comparison.csv");
        CHECK(csv.find("activity,a,body_weight_g,pearson,") != std::string::npos);
        CHECK(csv.find("respiration,a,body_weight_g,pearson,") != std::string::npos);
    }
}

TEST_CASE("errors and determinism")
{
    const auto dir = testing::temp_dir("cli_misc");
    SUBCASE("json errors")
    {
        const auto r = run(dir, "--json-errors decompose " + q(dir / "absent.csv"));
        CHECK(r.code == 2);
        const auto j = nlohmann::json::parse(r.err);
        CHECK(j.at("exit_code") == 2);
        CHECK(j.contains("error"));
        CHECK(j.at("message").get<std::string>().find("absent.csv") != std::string::npos);
    }
    SUBCASE("bad arguments")
    {
        CHECK(run(dir, "no-such-command").code == 2);
        CHECK(run(dir, "--config " + q(dir / "missing.json") + " rhythm x.csv").code == 2);
    }
    SUBCASE("synthetic output is reproducible")
    {
        REQUIRE(run(dir, "--seed 9 --out " + q(dir / "a") + " synth session --hours 0.5 --rate 20").code == 0);
        REQUIRE(run(dir, "--seed 9 --out " + q(dir / "b") + " synth session --hours 0.5 --rate 20").code == 0);
        for (const auto& entry : fs::directory_iterator(dir / "a")) {
            CHECK(testing::slurp(entry.path()) == testing::slurp(dir / "b" / entry.path().filename()));
        }
    }
}
