#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace operkit::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    std::string method;
};

// Pooled samples up to this size get exact permutation p-values.
inline constexpr std::size_t kExactMannWhitneyLimit = 12;

enum class MwMode { automatic, exact, normal };

/// U = min(U_a, U_b) with mid-ranks for ties. Two-sided p: in automatic
/// mode exact by enumeration when n_a + n_b <= 12, otherwise the normal
/// approximation with tie and continuity corrections. Throws
/// PreconditionError on empty input.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwMode mode = MwMode::automatic);

/// U_a: the number of (a, b) pairs with a > b, counting ties as 1/2.
double mann_whitney_u_a(std::span<const double> a, std::span<const double> b);

/// Pooled-variance two-sample Student t, two-sided p.
TestResult t_test(std::span<const double> a, std::span<const double> b);

/// Pearson r with the two-sided p of t = r sqrt((n-2)/(1-r^2)).
TestResult pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided tail probability of Student's t with `df` degrees of freedom,
/// via the regularized incomplete beta function.
double student_t_two_sided(double t, double df);

/// Mid-ranks (1-based) of the values.
std::vector<double> midranks(std::span<const double> values);

} // namespace operkit::stats
