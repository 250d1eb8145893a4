#include "operkit/ingest.hpp"

#include "operkit/error.hpp"
#include "operkit/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

namespace operkit::ingest {

namespace {

constexpr std::array<char, 4> kAefbMagic{'A', 'E', 'F', 'B'};
constexpr std::uint8_t kAefbVersion = 1;
constexpr double kSpacingTolerance = 1e-9;

double spacing_tolerance(double t)
{
    // 1e-9 s plus the representation error of large timestamps.
    return kSpacingTolerance + 1e-13 * std::abs(t);
}

std::uint16_t read_u16(const unsigned char* p)
{
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::int16_t read_i16(const unsigned char* p)
{
    return static_cast<std::int16_t>(read_u16(p));
}

void put_u16(std::string& out, std::uint16_t v)
{
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v)
{
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<char>((v >> shift) & 0xff));
    }
}

std::int16_t quantize(double g)
{
    const double lsb = std::round(g * kAefbLsbPerG);
    const double clamped = std::clamp(lsb, static_cast<double>(std::numeric_limits<std::int16_t>::min()),
                                      static_cast<double>(std::numeric_limits<std::int16_t>::max()));
    return static_cast<std::int16_t>(clamped);
}

Recording parse_aefb(std::istream& in)
{
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 11) {
        throw InputError("malformed header: AEFB stream shorter than its 11-byte header");
    }
    if (!std::equal(kAefbMagic.begin(), kAefbMagic.end(), bytes.begin())) {
        throw InputError("malformed header: bad AEFB magic");
    }
    const std::uint8_t version = data[4];
    if (version != kAefbVersion) {
        throw InputError("unknown format version: AEFB v" + std::to_string(version));
    }
    const std::uint16_t rate = read_u16(data + 5);
    const std::uint32_t count = read_u32(data + 7);
    if (rate == 0) {
        throw InputError("malformed header: AEFB rate_hz is zero");
    }
    const std::size_t payload = bytes.size() - 11;
    if (payload % 6 != 0 || payload / 6 != count) {
        std::ostringstream msg;
        msg << "sample-count mismatch: header declares " << count << " samples, payload holds "
            << payload / 6 << " triplets";
        if (payload % 6 != 0) {
            msg << " plus " << payload % 6 << " stray bytes";
        }
        throw InputError(msg.str());
    }

    std::vector<Sample> samples(count);
    const double rate_hz = rate;
    for (std::uint32_t i = 0; i < count; ++i) {
        const unsigned char* p = data + 11 + 6 * static_cast<std::size_t>(i);
        samples[i] = Sample{static_cast<double>(i) / rate_hz, read_i16(p) / kAefbLsbPerG,
                            read_i16(p + 2) / kAefbLsbPerG, read_i16(p + 4) / kAefbLsbPerG};
    }
    return Recording(std::move(samples), rate_hz);
}

Recording parse_csv(std::istream& in, std::optional<double> rate_hint)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("malformed header: empty CSV");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kCsvHeader) {
        throw InputError("malformed header: expected '" + std::string(kCsvHeader) + "', got '" + line + "'");
    }

    std::vector<Sample> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw InputError("line " + std::to_string(line_no) + ": expected 4 fields");
        }
        try {
            samples.push_back(Sample{parse_double(fields[0]), parse_double(fields[1]), parse_double(fields[2]),
                                     parse_double(fields[3])});
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (samples.size() >= 2 && !(samples.back().t > samples[samples.size() - 2].t)) {
            throw InputError("non-monotonic time at line " + std::to_string(line_no));
        }
    }

    double rate_hz = 0.0;
    if (rate_hint) {
        rate_hz = *rate_hint;
    } else {
        if (samples.size() < 2) {
            throw InputError("cannot infer sampling rate from fewer than 2 rows");
        }
        rate_hz = static_cast<double>(samples.size() - 1) / (samples.back().t - samples.front().t);
        const double nearest = std::round(rate_hz);
        if (nearest > 0.0 && std::abs(rate_hz - nearest) <= 1e-9 * nearest) {
            rate_hz = nearest;
        }
    }
    return Recording(std::move(samples), rate_hz);
}

} // namespace

Recording::Recording(std::vector<Sample> samples, double rate_hz, SessionInfo session)
    : samples_(std::move(samples)), rate_hz_(rate_hz), session_(std::move(session))
{
    if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
        throw InputError("sampling rate must be positive and finite");
    }
    const double period = 1.0 / rate_hz_;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const Sample& s = samples_[i];
        if (!std::isfinite(s.t) || !std::isfinite(s.ax) || !std::isfinite(s.ay) || !std::isfinite(s.az)) {
            throw InputError("non-finite value at sample " + std::to_string(i));
        }
        if (i == 0) {
            continue;
        }
        const double dt = s.t - samples_[i - 1].t;
        if (!(dt > 0.0)) {
            throw InputError("non-monotonic time at sample " + std::to_string(i));
        }
        if (std::abs(dt - period) > spacing_tolerance(s.t)) {
            throw InputError("irregular sample spacing at sample " + std::to_string(i));
        }
    }
}

double Recording::start_s() const noexcept
{
    return samples_.empty() ? 0.0 : samples_.front().t;
}

double Recording::end_s() const noexcept
{
    return samples_.empty() ? 0.0 : samples_.back().t + 1.0 / rate_hz_;
}

Recording Recording::with_session(SessionInfo session) const
{
    Recording copy = *this;
    copy.session_ = std::move(session);
    return copy;
}

DriftModel::DriftModel(double drift_ppm, double offset_s) : drift_ppm_(drift_ppm), offset_s_(offset_s)
{
    if (!std::isfinite(drift_ppm) || !std::isfinite(offset_s)) {
        throw PreconditionError("drift model parameters must be finite");
    }
    if (std::abs(drift_ppm) >= 10000.0) {
        throw PreconditionError("|drift_ppm| must be below 10000");
    }
}

Format parse_format(std::string_view name)
{
    if (name == "csv") {
        return Format::csv;
    }
    if (name == "aefb") {
        return Format::aefb;
    }
    throw InputError("unknown format '" + std::string(name) + "' (expected csv or aefb)");
}

Format guess_format(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    return (ext == ".aefb" || ext == ".bin") ? Format::aefb : Format::csv;
}

Recording parse_recording(std::istream& in, Format format, std::optional<double> rate_hint)
{
    return format == Format::aefb ? parse_aefb(in) : parse_csv(in, rate_hint);
}

Recording read_recording(const std::filesystem::path& path, Format format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return parse_recording(in, format);
}

void emit_recording(std::ostream& out, const Recording& rec, Format format)
{
    if (format == Format::csv) {
        std::string text;
        text.reserve(rec.size() * 48 + 32);
        text.append(kCsvHeader);
        text.push_back('\n');
        for (const Sample& s : rec.samples()) {
            text += format_double(s.t);
            text.push_back(',');
            text += format_double(s.ax);
            text.push_back(',');
            text += format_double(s.ay);
            text.push_back(',');
            text += format_double(s.az);
            text.push_back('\n');
        }
        out << text;
        return;
    }

    const double rate = rec.rate_hz();
    if (rate != std::round(rate) || rate < 1.0 || rate > 65535.0) {
        throw PreconditionError("AEFB requires an integer sampling rate in [1, 65535]");
    }
    if (rec.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw PreconditionError("too many samples for AEFB");
    }
    std::string bytes(kAefbMagic.begin(), kAefbMagic.end());
    bytes.reserve(11 + rec.size() * 6);
    bytes.push_back(static_cast<char>(kAefbVersion));
    put_u16(bytes, static_cast<std::uint16_t>(rate));
    put_u32(bytes, static_cast<std::uint32_t>(rec.size()));
    for (const Sample& s : rec.samples()) {
        put_u16(bytes, static_cast<std::uint16_t>(quantize(s.ax)));
        put_u16(bytes, static_cast<std::uint16_t>(quantize(s.ay)));
        put_u16(bytes, static_cast<std::uint16_t>(quantize(s.az)));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_recording(const std::filesystem::path& path, const Recording& rec, Format format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    emit_recording(out, rec, format);
    if (!out) {
        throw InputError("write failed: " + path.string());
    }
}

Recording correct_clock_drift(const Recording& rec, const DriftModel& model)
{
    std::vector<Sample> out(rec.samples().begin(), rec.samples().end());
    for (Sample& s : out) {
        s.t = model.apply(s.t);
    }
    return Recording(std::move(out), rec.rate_hz() / model.scale(), rec.session());
}

std::vector<MeasurementWindow> slice_windows(const Recording& rec, const WindowSchedule& schedule)
{
    if (!(schedule.duration_s > 0.0) || !(schedule.period_s > 0.0)) {
        throw PreconditionError("window period and duration must be positive");
    }
    if (schedule.duration_s > schedule.period_s) {
        throw PreconditionError("window duration exceeds period");
    }
    std::vector<MeasurementWindow> windows;
    if (rec.size() == 0) {
        return windows;
    }

    const auto samples = rec.samples();
    const double rate = rec.rate_hz();
    const auto per_window = static_cast<std::size_t>(std::llround(schedule.duration_s * rate));
    // Half a sample period absorbs representation error in the timestamps.
    const double tol = 0.5 / rate;
    const double first = rec.start_s();
    const double end = rec.end_s();

    auto k = static_cast<long long>(std::ceil((first - 1e-9) / schedule.period_s));
    k = std::max(k, 0LL);
    for (;; ++k) {
        const double start = static_cast<double>(k) * schedule.period_s;
        if (start + schedule.duration_s > end + 1e-9) {
            break;
        }
        const auto it = std::lower_bound(samples.begin(), samples.end(), start - tol,
                                         [](const Sample& s, double t) { return s.t < t; });
        const auto i0 = static_cast<std::size_t>(it - samples.begin());
        if (i0 + per_window > samples.size() || per_window == 0) {
            break;
        }
        if (samples[i0 + per_window - 1].t >= start + schedule.duration_s - tol) {
            continue;
        }
        windows.push_back(MeasurementWindow{start, schedule.duration_s, rate, samples.subspan(i0, per_window)});
    }
    return windows;
}

std::string session_sidecar_json(const SessionSidecar& sidecar)
{
    nlohmann::ordered_json j;
    const SessionInfo& s = sidecar.session;
    j["device_id"] = s.device_id;
    j["species"] = s.species;
    j["start_utc"] = format_iso8601(s.start_utc);
    if (s.body_weight_g) {
        j["body_weight_g"] = *s.body_weight_g;
    }
    if (s.swim_speed_bls) {
        j["swim_speed_bls"] = *s.swim_speed_bls;
    }
    j["drift"] = {{"drift_ppm", sidecar.drift.drift_ppm()}, {"offset_s", sidecar.drift.offset_s()}};
    return j.dump(2) + "\n";
}

SessionSidecar parse_session_sidecar(std::string_view json_text)
{
    try {
        const auto j = nlohmann::json::parse(json_text);
        SessionSidecar out;
        out.session.device_id = j.value("device_id", std::string{});
        out.session.species = j.value("species", std::string{});
        out.session.start_utc = parse_iso8601(j.at("start_utc").get<std::string>());
        if (j.contains("body_weight_g") && !j["body_weight_g"].is_null()) {
            out.session.body_weight_g = j["body_weight_g"].get<double>();
        }
        if (j.contains("swim_speed_bls") && !j["swim_speed_bls"].is_null()) {
            out.session.swim_speed_bls = j["swim_speed_bls"].get<double>();
        }
        if (j.contains("drift")) {
            const auto& d = j["drift"];
            out.drift = DriftModel(d.value("drift_ppm", 0.0), d.value("offset_s", 0.0));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad session sidecar: ") + e.what());
    }
}

SessionSidecar read_session_sidecar(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_session_sidecar(text.str());
}

void write_session_sidecar(const std::filesystem::path& path, const SessionSidecar& sidecar)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << session_sidecar_json(sidecar);
}

} // namespace operkit::ingest
