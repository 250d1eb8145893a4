#include "operkit/report.hpp"

#include "operkit/error.hpp"
#include "operkit/textio.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace operkit::report {

namespace {

using ojson = nlohmann::ordered_json;

ojson number(double v)
{
    // JSON has no infinities; keep them as strings that parse_double accepts.
    if (std::isfinite(v)) {
        return v;
    }
    return format_double(v);
}

double number_from(const nlohmann::json& j)
{
    if (j.is_string()) {
        return parse_double(j.get<std::string>());
    }
    return j.get<double>();
}

ojson fit_json(const pipeline::FitRow& row)
{
    ojson j;
    j["subject"] = row.subject;
    j["metric"] = std::string(rhythm::metric_name(row.metric));
    j["mesor"] = number(row.fit.mesor);
    j["amplitude"] = number(row.fit.amplitude);
    j["acrophase_hhmm"] = row.fit.acrophase_hhmm();
    j["acrophase_rad"] = number(row.fit.acrophase_rad);
    j["acrophase_h"] = number(row.fit.acrophase_h);
    j["period_h"] = number(row.fit.period_h);
    j["rss"] = number(row.fit.rss);
    j["f_statistic"] = number(row.fit.f_statistic);
    j["p_value"] = number(row.fit.p_value);
    j["n"] = row.fit.n;
    return j;
}

pipeline::FitRow fit_from(const nlohmann::json& j)
{
    pipeline::FitRow row;
    row.subject = j.at("subject").get<std::string>();
    row.metric = rhythm::parse_metric(j.at("metric").get<std::string>());
    row.fit.mesor = number_from(j.at("mesor"));
    row.fit.amplitude = number_from(j.at("amplitude"));
    row.fit.acrophase_rad = number_from(j.at("acrophase_rad"));
    row.fit.acrophase_h = number_from(j.at("acrophase_h"));
    row.fit.period_h = number_from(j.at("period_h"));
    row.fit.rss = number_from(j.at("rss"));
    row.fit.f_statistic = number_from(j.at("f_statistic"));
    row.fit.p_value = number_from(j.at("p_value"));
    row.fit.n = j.at("n").get<std::size_t>();
    return row;
}

std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        out.push_back(line);
        pos = end + 1;
    }
    return out;
}

} // namespace

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot write '" + path.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw InputError("write failed for '" + path.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw InputError("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
}

std::string rhythm_report_json(const pipeline::RhythmReport& report)
{
    ojson j;
    j["group"] = report.group;
    j["fits"] = ojson::array();
    for (const auto& row : report.fits) {
        j["fits"].push_back(fit_json(row));
    }
    j["consensus"] = ojson::array();
    for (const auto& row : report.consensus) {
        j["consensus"].push_back(fit_json(row));
    }
    j["coupling"] = ojson::array();
    for (const auto& c : report.coupling) {
        ojson cj;
        cj["subject"] = c.subject;
        cj["r"] = number(c.r);
        cj["p_value"] = number(c.p_value);
        cj["n"] = c.n;
        j["coupling"].push_back(cj);
    }
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

pipeline::RhythmReport parse_rhythm_report(std::string_view json_text)
{
    try {
        const auto j = nlohmann::json::parse(json_text);
        pipeline::RhythmReport report;
        report.group = j.at("group").get<std::string>();
        for (const auto& f : j.at("fits")) {
            report.fits.push_back(fit_from(f));
        }
        for (const auto& f : j.at("consensus")) {
            report.consensus.push_back(fit_from(f));
        }
        for (const auto& c : j.at("coupling")) {
            report.coupling.push_back({c.at("subject").get<std::string>(), number_from(c.at("r")),
                                       number_from(c.at("p_value")), c.at("n").get<std::size_t>()});
        }
        if (j.contains("warnings")) {
            report.warnings = j.at("warnings").get<std::vector<std::string>>();
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed rhythm report: ") + e.what());
    }
}

std::string comparison_csv(const std::vector<pipeline::ComparisonRow>& rows)
{
    std::string out(kComparisonCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += r.metric + ',' + r.group_a + ',' + r.group_b + ',' + r.method + ',' + format_double(r.statistic) + ',' +
               format_double(r.p_value) + '\n';
    }
    return out;
}

std::vector<pipeline::ComparisonRow> parse_comparison_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != kComparisonCsvHeader) {
        throw InputError("unexpected comparison CSV header");
    }
    std::vector<pipeline::ComparisonRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto f = split_fields(lines[i]);
        if (f.size() != 6) {
            throw InputError("comparison CSV line " + std::to_string(i + 1) + ": expected 6 fields");
        }
        rows.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3]),
                        parse_double(f[4]), parse_double(f[5])});
    }
    return rows;
}

std::map<std::string, double> parse_weights_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != "subject,body_weight_g") {
        throw InputError("weights CSV must start with 'subject,body_weight_g'");
    }
    std::map<std::string, double> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto f = split_fields(lines[i]);
        if (f.size() != 2) {
            throw InputError("weights CSV line " + std::to_string(i + 1) + ": expected 2 fields");
        }
        if (!out.emplace(std::string(f[0]), parse_double(f[1])).second) {
            throw InputError("weights CSV: duplicate subject '" + std::string(f[0]) + "'");
        }
    }
    return out;
}

void persist_results(const ResultBundle& bundle, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    write_text_file(dir / "windows.csv", metrics::window_csv(bundle.windows));
    write_text_file(dir / "comparison.csv", comparison_csv(bundle.comparison));
    write_text_file(dir / "components.csv", lognormal::component_table_csv(
                                                bundle.extraction ? bundle.extraction->sequence
                                                                  : lognormal::LognormalSequence{}));
    write_text_file(dir / "features.csv", lognormal::feature_table_csv(bundle.feature_groups));
    if (bundle.extraction) {
        write_text_file(dir / "extraction.json", extraction::result_json(*bundle.extraction));
    }
    if (bundle.rhythm) {
        write_text_file(dir / "rhythm_report.json", rhythm_report_json(*bundle.rhythm));
        write_text_file(dir / "profile_activity.csv", rhythm::profile_csv(bundle.rhythm->activity_profile));
        write_text_file(dir / "profile_respiration.csv", rhythm::profile_csv(bundle.rhythm->respiration_profile));
    }
}

} // namespace operkit::report
