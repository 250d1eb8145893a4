#include "operkit/error.hpp"
#include "operkit/ingest.hpp"
#include "operkit/pipeline.hpp"
#include "operkit/report.hpp"
#include "operkit/synth.hpp"
#include "operkit/textio.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace operkit;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitPrecondition = 3;

struct GlobalOptions {
    std::string config;
    std::uint64_t seed = 1;
    std::string format;
    std::string out;
    bool json_errors = false;
};

void warn(const std::string& text)
{
    std::cerr << "operkit: warning: " << text << '\n';
}

pipeline::PipelineConfig make_config(const GlobalOptions& g)
{
    pipeline::PipelineConfig cfg = g.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(g.config);
    if (!g.out.empty()) {
        cfg.output_dir = g.out;
    }
    cfg.metrics.filter = cfg.filter;
    return cfg;
}

fs::path output_dir(const pipeline::PipelineConfig& cfg)
{
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) {
        throw InputError("cannot create output directory '" + cfg.output_dir.string() + "': " + ec.message());
    }
    return cfg.output_dir;
}

ingest::Format input_format(const GlobalOptions& g, const fs::path& path)
{
    return g.format.empty() ? ingest::guess_format(path) : ingest::parse_format(g.format);
}

fs::path sidecar_path(const fs::path& recording)
{
    auto p = recording;
    p += ".session.json";
    return p;
}

// "<subject>.windows.csv" -> "<subject>"; otherwise the file stem.
std::string subject_from_path(const fs::path& path)
{
    const std::string name = path.filename().string();
    constexpr std::string_view kSuffix = ".windows.csv";
    if (name.size() > kSuffix.size() && name.ends_with(kSuffix)) {
        return name.substr(0, name.size() - kSuffix.size());
    }
    return path.stem().string();
}

int run_decompose(const GlobalOptions& g, const std::string& input, const std::string& target, bool no_detrend,
                  std::string label)
{
    const auto cfg = make_config(g);
    const auto rec = ingest::read_recording(input, input_format(g, input));
    pipeline::DecomposeOptions options;
    options.target = pipeline::parse_decompose_target(target);
    options.detrend = !no_detrend;
    const auto out = pipeline::run_decompose(rec, cfg, options);

    const auto dir = output_dir(cfg);
    if (label.empty()) {
        label = fs::path(input).stem().string();
    }
    std::vector<lognormal::LabeledSummary> groups;
    if (out.summary) {
        groups.push_back({label, *out.summary});
    }
    report::write_text_file(dir / "components.csv", lognormal::component_table_csv(out.result.sequence));
    report::write_text_file(dir / "features.csv", lognormal::feature_table_csv(groups));
    report::write_text_file(dir / "extraction.json", extraction::result_json(out.result));
    if (out.result.zero_trace) {
        warn("input trace is zero; no components extracted");
    }
    std::cout << "components: " << out.result.sequence.size() << "\nsnr_db: " << format_double(out.result.snr_db)
              << '\n';
    return 0;
}

int run_monitor(const GlobalOptions& g, const std::string& input, std::string session, unsigned threads)
{
    auto cfg = make_config(g);
    if (threads != 0) {
        cfg.threads = threads;
    }
    auto rec = ingest::read_recording(input, input_format(g, input));
    if (session.empty() && fs::exists(sidecar_path(input))) {
        session = sidecar_path(input).string();
    }
    std::string subject = fs::path(input).stem().string();
    if (!session.empty()) {
        const auto sidecar = ingest::read_session_sidecar(session);
        rec = ingest::correct_clock_drift(rec.with_session(sidecar.session), sidecar.drift);
        if (!sidecar.session.device_id.empty()) {
            subject = sidecar.session.device_id;
        }
    } else {
        warn("no session sidecar; window times are relative to 1970-01-01T00:00:00Z");
    }
    const auto rows = pipeline::run_monitor(rec, cfg);
    if (rows.empty()) {
        throw PreconditionError("recording shorter than one measurement window");
    }
    const auto path = output_dir(cfg) / (subject + ".windows.csv");
    report::write_text_file(path, metrics::window_csv(rows));
    std::cout << "windows: " << rows.size() << "\noutput: " << path.string() << '\n';
    return 0;
}

int run_rhythm(const GlobalOptions& g, const std::vector<std::string>& inputs, const std::string& label,
               unsigned threads)
{
    auto cfg = make_config(g);
    if (threads != 0) {
        cfg.threads = threads;
    }
    std::vector<pipeline::SubjectWindows> subjects;
    for (const auto& in : inputs) {
        subjects.push_back({subject_from_path(in), metrics::parse_window_csv(report::read_text_file(in))});
    }
    const auto rep = pipeline::run_rhythm(subjects, cfg, label);
    for (const auto& w : rep.warnings) {
        warn(w);
    }
    const auto dir = output_dir(cfg);
    report::write_text_file(dir / "rhythm_report.json", report::rhythm_report_json(rep));
    report::write_text_file(dir / "profile_activity.csv", rhythm::profile_csv(rep.activity_profile));
    report::write_text_file(dir / "profile_respiration.csv", rhythm::profile_csv(rep.respiration_profile));
    for (const auto& row : rep.consensus) {
        std::cout << "consensus " << rhythm::metric_name(row.metric) << ": mesor " << format_double(row.fit.mesor)
                  << ", amplitude " << format_double(row.fit.amplitude) << ", acrophase "
                  << row.fit.acrophase_hhmm() << '\n';
    }
    return 0;
}

int run_compare(const GlobalOptions& g, const std::string& a, const std::string& b, const std::string& weights)
{
    const auto cfg = make_config(g);
    const auto ra = report::parse_rhythm_report(report::read_text_file(a));
    const auto rb = report::parse_rhythm_report(report::read_text_file(b));
    std::optional<std::map<std::string, double>> w;
    if (!weights.empty()) {
        w = report::parse_weights_csv(report::read_text_file(weights));
    }
    std::vector<std::string> warnings;
    const auto rows = pipeline::run_compare(ra, rb, w ? &*w : nullptr, &warnings);
    for (const auto& text : warnings) {
        warn(text);
    }
    const auto path = output_dir(cfg) / "comparison.csv";
    report::write_text_file(path, report::comparison_csv(rows));
    std::cout << report::comparison_csv(rows);
    return 0;
}

struct SessionArgs {
    std::string species = "sea_bream";
    double hours = 48.0;
    double rate = 100.0;
    std::string start = "2019-06-01T12:00:00Z";
    std::string device_id;
    double drift_ppm = 0.0;
    double offset_s = 0.0;
};

int run_synth_session(const GlobalOptions& g, const SessionArgs& args)
{
    const auto cfg = make_config(g);
    const auto profile = synth::profile_by_name(args.species);
    synth::SessionSpec spec;
    spec.start_utc = parse_iso8601(args.start);
    spec.duration_h = args.hours;
    spec.rate_hz = args.rate;
    spec.seed = g.seed;
    spec.device_id = args.device_id.empty() ? args.species + "_" + std::to_string(g.seed) : args.device_id;
    spec.activity_scale = cfg.metrics.activity_scale;
    const auto rec = synth::synth_accel_session(profile, spec);

    const auto format = g.format.empty() ? ingest::Format::aefb : ingest::parse_format(g.format);
    const auto dir = output_dir(cfg);
    const auto path = dir / (spec.device_id + (format == ingest::Format::aefb ? ".aefb" : ".csv"));
    ingest::write_recording(path, rec, format);

    ingest::SessionSidecar sidecar{rec.session(), ingest::DriftModel(args.drift_ppm, args.offset_s)};
    ingest::write_session_sidecar(sidecar_path(path), sidecar);
    report::write_text_file(dir / (spec.device_id + ".manifest.json"), synth::profile_json(profile, g.seed));
    std::cout << "recording: " << path.string() << "\nsamples: " << rec.size() << '\n';
    return 0;
}

lognormal::LognormalComponent parse_component(const std::string& text)
{
    const auto f = split_fields(text);
    if (f.size() != 4) {
        throw InputError("component must be 't0,D,mu,sigma', got '" + text + "'");
    }
    lognormal::LognormalComponent c{parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])};
    try {
        c.validate();
    } catch (const PreconditionError& e) {
        throw InputError(std::string("component '") + text + "': " + e.what());
    }
    return c;
}

int run_synth_lognormal(const GlobalOptions& g, const std::vector<std::string>& components, double rate,
                        double seconds, std::optional<double> noise_snr, const std::string& name)
{
    const auto cfg = make_config(g);
    std::vector<lognormal::LognormalComponent> parsed;
    for (const auto& text : components) {
        parsed.push_back(parse_component(text));
    }
    const lognormal::LognormalSequence seq(std::move(parsed));
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    if (n < 2) {
        throw PreconditionError("synthetic trace needs at least 2 samples");
    }
    // z acceleration is the analytic time derivative of the velocity model,
    // so integrating it recovers the sequence.
    std::vector<ingest::Sample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        double a = 0.0;
        for (const auto& c : seq.components()) {
            a -= lognormal::component_gradient(c, t)[0];
        }
        samples[i] = {t, 0.0, 0.0, a};
    }
    if (noise_snr) {
        double ss = 0.0;
        for (const auto& s : samples) {
            ss += s.az * s.az;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n)) * std::pow(10.0, -*noise_snr / 20.0);
        std::mt19937_64 rng(g.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& s : samples) {
            s.az += sd * normal(rng);
        }
    }
    const ingest::Recording rec(std::move(samples), rate);
    const auto format = g.format.empty() ? ingest::Format::aefb : ingest::parse_format(g.format);
    const auto path = output_dir(cfg) / (name + (format == ingest::Format::aefb ? ".aefb" : ".csv"));
    ingest::write_recording(path, rec, format);
    std::cout << "recording: " << path.string() << "\nsamples: " << n << '\n';
    return 0;
}

void report_error(const GlobalOptions& g, std::string_view kind, const std::string& message, int code)
{
    if (g.json_errors) {
        nlohmann::ordered_json j;
        j["error"] = kind;
        j["message"] = message;
        j["exit_code"] = code;
        std::cerr << j.dump() << '\n';
    } else {
        std::cerr << "operkit: error: " << message << '\n';
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"operkit: accelerometer analysis for fish biosensing"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("--config", g.config, "Pipeline config JSON");
    app.add_option("--seed", g.seed, "Random seed for synthetic data");
    app.add_option("--format", g.format, "Recording format: csv or aefb");
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--json-errors", g.json_errors, "Report errors as JSON on stderr");

    std::function<int()> action;

    auto* decompose = app.add_subcommand("decompose", "Sigma-lognormal decomposition of one recording");
    std::string dec_input;
    std::string dec_target = "operculum";
    bool dec_no_detrend = false;
    std::string dec_label;
    decompose->add_option("input", dec_input, "Recording file")->required();
    decompose->add_option("--target", dec_target, "operculum (z axis) or body (x/y speed)");
    decompose->add_flag("--no-detrend", dec_no_detrend, "Decompose the raw axis integral");
    decompose->add_option("--label", dec_label, "Column label in the feature table");
    decompose->callback([&] { action = [&] { return run_decompose(g, dec_input, dec_target, dec_no_detrend, dec_label); }; });

    auto* monitor = app.add_subcommand("monitor", "Per-window activity and respiration");
    std::string mon_input;
    std::string mon_session;
    unsigned mon_threads = 0;
    monitor->add_option("input", mon_input, "Recording file")->required();
    monitor->add_option("--session", mon_session, "Session sidecar JSON (default: <input>.session.json)");
    monitor->add_option("--threads", mon_threads, "Worker threads (0 = all cores)");
    monitor->callback([&] { action = [&] { return run_monitor(g, mon_input, mon_session, mon_threads); }; });

    auto* rhythm_cmd = app.add_subcommand("rhythm", "Cosinor analysis of window summaries");
    std::vector<std::string> rh_inputs;
    std::string rh_label = "group";
    unsigned rh_threads = 0;
    rhythm_cmd->add_option("inputs", rh_inputs, "Window CSV files, one per subject")->required();
    rhythm_cmd->add_option("--label", rh_label, "Group label");
    rhythm_cmd->add_option("--threads", rh_threads, "Worker threads (0 = all cores)");
    rhythm_cmd->callback([&] { action = [&] { return run_rhythm(g, rh_inputs, rh_label, rh_threads); }; });

    auto* compare = app.add_subcommand("compare", "Compare two groups' rhythm reports");
    std::string cmp_a;
    std::string cmp_b;
    std::string cmp_weights;
    compare->add_option("group_a", cmp_a, "Rhythm report JSON of group A")->required();
    compare->add_option("group_b", cmp_b, "Rhythm report JSON of group B")->required();
    compare->add_option("--weights", cmp_weights, "CSV 'subject,body_weight_g'");
    compare->callback([&] { action = [&] { return run_compare(g, cmp_a, cmp_b, cmp_weights); }; });

    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic fixtures");
    synth_cmd->require_subcommand(1);
    auto* synth_session = synth_cmd->add_subcommand("session", "Tri-axial session for a species profile");
    SessionArgs sargs;
    synth_session->add_option("--species", sargs.species, "sea_bream or sea_bass");
    synth_session->add_option("--hours", sargs.hours, "Duration in hours");
    synth_session->add_option("--rate", sargs.rate, "Sampling rate (Hz)");
    synth_session->add_option("--start", sargs.start, "Session start, UTC ISO 8601");
    synth_session->add_option("--device-id", sargs.device_id, "Device id (default: <species>_<seed>)");
    synth_session->add_option("--drift-ppm", sargs.drift_ppm, "Drift correction written to the sidecar");
    synth_session->add_option("--offset-s", sargs.offset_s, "Offset correction written to the sidecar");
    synth_session->callback([&] { action = [&] { return run_synth_session(g, sargs); }; });

    auto* synth_ln = synth_cmd->add_subcommand("lognormal", "z-axis recording whose velocity is a lognormal sequence");
    std::vector<std::string> ln_components;
    double ln_rate = 100.0;
    double ln_seconds = 3.0;
    std::optional<double> ln_noise;
    std::string ln_name = "lognormal";
    synth_ln->add_option("--component", ln_components, "t0,D,mu,sigma (repeatable)")->required();
    synth_ln->add_option("--rate", ln_rate, "Sampling rate (Hz)");
    synth_ln->add_option("--seconds", ln_seconds, "Duration in seconds");
    synth_ln->add_option("--noise-snr", ln_noise, "Add white noise at this SNR (dB)");
    synth_ln->add_option("--name", ln_name, "Output file stem");
    synth_ln->callback([&] {
        action = [&] { return run_synth_lognormal(g, ln_components, ln_rate, ln_seconds, ln_noise, ln_name); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        report_error(g, "usage_error", e.what(), kExitInput);
        return kExitInput;
    }

    try {
        return action ? action() : 0;
    } catch (const InputError& e) {
        report_error(g, "input_error", e.what(), kExitInput);
        return kExitInput;
    } catch (const PreconditionError& e) {
        report_error(g, "precondition_error", e.what(), kExitPrecondition);
        return kExitPrecondition;
    } catch (const std::exception& e) {
        report_error(g, "internal_error", e.what(), 1);
        return 1;
    }
}
