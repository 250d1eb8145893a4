#pragma once

#include "operkit/ingest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("operkit_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline operkit::ingest::Recording constant_recording(double rate, std::size_t n, double ax = 0.0, double ay = 0.0,
                                                     double az = 0.0)
{
    std::vector<operkit::ingest::Sample> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = {static_cast<double>(i) / rate, ax, ay, az};
    }
    return operkit::ingest::Recording(std::move(s), rate);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

} // namespace testing
