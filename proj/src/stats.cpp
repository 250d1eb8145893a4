#include "operkit/stats.hpp"

#include "operkit/error.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace operkit::stats {

namespace {

double mean_of(std::span<const double> x)
{
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double normal_upper_tail(double z)
{
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Exact two-sided p for the rank sum of group a. Works on doubled
// mid-ranks so every rank sum is an integer; counts subsets of each size
// by dynamic programming.
double exact_rank_sum_p(std::span<const double> ranks, std::size_t n_a, double observed_u_a)
{
    const std::size_t total = ranks.size();
    std::vector<int> doubled(total);
    int max_sum = 0;
    for (std::size_t i = 0; i < total; ++i) {
        doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
        max_sum += doubled[i];
    }
    // ways[k][s]: subsets of size k with doubled rank sum s.
    std::vector<std::vector<double>> ways(n_a + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t k = std::min(i + 1, n_a); k >= 1; --k) {
            for (int s = max_sum; s >= doubled[i]; --s) {
                ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - doubled[i])];
            }
        }
    }
    const double n_b = static_cast<double>(total - n_a);
    const double center = 0.5 * static_cast<double>(n_a) * n_b;
    const double observed_dev = std::abs(observed_u_a - center);
    const double offset = static_cast<double>(n_a) * static_cast<double>(n_a + 1) / 2.0;
    double extreme = 0.0;
    double all = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
        const double count = ways[n_a][static_cast<std::size_t>(s)];
        if (count == 0.0) {
            continue;
        }
        all += count;
        const double u = 0.5 * s - offset;
        if (std::abs(u - center) >= observed_dev - 1e-9) {
            extreme += count;
        }
    }
    return std::min(1.0, extreme / all);
}

} // namespace

std::vector<double> midranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double mann_whitney_u_a(std::span<const double> a, std::span<const double> b)
{
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
    const double n_a = static_cast<double>(a.size());
    return rank_sum - n_a * (n_a + 1.0) / 2.0;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwMode mode)
{
    if (a.empty() || b.empty()) {
        throw PreconditionError("mann_whitney_u: empty sample");
    }
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    const double n_a = static_cast<double>(a.size());
    const double n_b = static_cast<double>(b.size());
    const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
    const double u_a = rank_sum - n_a * (n_a + 1.0) / 2.0;
    const double u_b = n_a * n_b - u_a;

    TestResult out;
    out.statistic = std::min(u_a, u_b);
    out.n_a = a.size();
    out.n_b = b.size();

    const bool exact = mode == MwMode::exact || (mode == MwMode::automatic && pooled.size() <= kExactMannWhitneyLimit);
    if (exact) {
        out.method = "mann_whitney_exact";
        out.p_value = exact_rank_sum_p(ranks, a.size(), u_a);
        return out;
    }

    out.method = "mann_whitney_normal";
    const double total = n_a + n_b;
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        const double t = static_cast<double>(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    const double variance = n_a * n_b / 12.0 * ((total + 1.0) - tie_sum / (total * (total - 1.0)));
    if (!(variance > 0.0)) {
        out.p_value = 1.0;
        return out;
    }
    const double deviation = std::max(std::abs(u_a - 0.5 * n_a * n_b) - 0.5, 0.0);
    out.p_value = std::min(1.0, 2.0 * normal_upper_tail(deviation / std::sqrt(variance)));
    return out;
}

double student_t_two_sided(double t, double df)
{
    if (std::isinf(t)) {
        return 0.0;
    }
    if (t == 0.0) {
        return 1.0;
    }
    return boost::math::ibeta(0.5 * df, 0.5, df / (df + t * t));
}

TestResult t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() < 2 || b.size() < 2) {
        throw PreconditionError("t_test: each sample needs at least 2 values");
    }
    const double n_a = static_cast<double>(a.size());
    const double n_b = static_cast<double>(b.size());
    const double m_a = mean_of(a);
    const double m_b = mean_of(b);
    double ss_a = 0.0;
    double ss_b = 0.0;
    for (double v : a) {
        ss_a += (v - m_a) * (v - m_a);
    }
    for (double v : b) {
        ss_b += (v - m_b) * (v - m_b);
    }
    const double df = n_a + n_b - 2.0;
    const double pooled = (ss_a + ss_b) / df;
    if (!(pooled > 0.0)) {
        throw PreconditionError("t_test: zero pooled variance");
    }
    TestResult out;
    out.statistic = (m_a - m_b) / std::sqrt(pooled * (1.0 / n_a + 1.0 / n_b));
    out.p_value = student_t_two_sided(out.statistic, df);
    out.n_a = a.size();
    out.n_b = b.size();
    out.method = "t_test";
    return out;
}

TestResult pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw PreconditionError("pearson: length mismatch");
    }
    if (x.size() < 3) {
        throw PreconditionError("pearson: need at least 3 pairs");
    }
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw PreconditionError("pearson: zero variance");
    }
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(x.size()) - 2.0;
    TestResult out;
    out.statistic = r;
    out.n_a = x.size();
    out.n_b = y.size();
    out.method = "pearson";
    if (std::abs(r) == 1.0) {
        out.p_value = 0.0;
    } else {
        out.p_value = student_t_two_sided(r * std::sqrt(df / (1.0 - r * r)), df);
    }
    return out;
}

} // namespace operkit::stats
