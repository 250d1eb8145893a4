#include "operkit/lognormal.hpp"

#include "operkit/error.hpp"
#include "operkit/textio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace operkit::lognormal {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

} // namespace

void LognormalComponent::validate() const
{
    if (!std::isfinite(t0) || !std::isfinite(D) || !std::isfinite(mu) || !std::isfinite(sigma)) {
        throw PreconditionError("lognormal component has non-finite parameters");
    }
    if (!(sigma > 0.0)) {
        throw PreconditionError("lognormal sigma must be positive");
    }
    if (!(D > 0.0)) {
        throw PreconditionError("lognormal D must be positive");
    }
}

LognormalSequence::LognormalSequence(std::vector<LognormalComponent> components) : components_(std::move(components))
{
    for (const auto& c : components_) {
        c.validate();
    }
    std::stable_sort(components_.begin(), components_.end(),
                     [](const LognormalComponent& a, const LognormalComponent& b) { return a.t0 < b.t0; });
}

std::array<double, 8> feature_values(const MovementFeatures& f)
{
    return {f.width_s, f.rise_s, f.drop_s, f.skew, f.kurtosis, f.mu, f.sigma, f.D};
}

double eval_component(const LognormalComponent& c, double t)
{
    const double tau = t - c.t0;
    if (tau <= 0.0) {
        return 0.0;
    }
    const double z = (std::log(tau) - c.mu) / c.sigma;
    return c.D * kInvSqrt2Pi / (c.sigma * tau) * std::exp(-0.5 * z * z);
}

std::array<double, 4> component_gradient(const LognormalComponent& c, double t)
{
    const double tau = t - c.t0;
    if (tau <= 0.0) {
        return {0.0, 0.0, 0.0, 0.0};
    }
    const double z = (std::log(tau) - c.mu) / c.sigma;
    const double v = c.D * kInvSqrt2Pi / (c.sigma * tau) * std::exp(-0.5 * z * z);
    return {v * (1.0 + z / c.sigma) / tau, v / c.D, v * z / c.sigma, v * (z * z - 1.0) / c.sigma};
}

kinematics::VelocityTrace eval_sequence(const LognormalSequence& s, std::span<const double> grid)
{
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw PreconditionError("evaluation grid must be strictly increasing");
        }
    }
    kinematics::VelocityTrace out;
    out.values.assign(grid.size(), 0.0);
    if (grid.size() >= 2) {
        out.rate_hz = static_cast<double>(grid.size() - 1) / (grid.back() - grid.front());
    }
    out.t_start_s = grid.empty() ? 0.0 : grid.front();
    for (const auto& c : s.components()) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            out.values[i] += eval_component(c, grid[i]);
        }
    }
    return out;
}

kinematics::VelocityTrace eval_sequence(const LognormalSequence& s, double t_start, double rate_hz, std::size_t n)
{
    kinematics::VelocityTrace out;
    out.values.assign(n, 0.0);
    out.rate_hz = rate_hz;
    out.t_start_s = t_start;
    for (const auto& c : s.components()) {
        for (std::size_t i = 0; i < n; ++i) {
            out.values[i] += eval_component(c, out.time_at(i));
        }
    }
    return out;
}

CharacteristicTimes characteristic_times(const LognormalComponent& c)
{
    return {c.t0 + std::exp(c.mu - 3.0 * c.sigma), c.t0 + std::exp(c.mu - c.sigma * c.sigma),
            c.t0 + std::exp(c.mu + 3.0 * c.sigma)};
}

double lognormal_skew(double sigma)
{
    const double s2 = sigma * sigma;
    return (std::exp(s2) + 2.0) * std::sqrt(std::expm1(s2));
}

double lognormal_kurtosis(double sigma)
{
    const double s2 = sigma * sigma;
    return std::exp(4.0 * s2) + 2.0 * std::exp(3.0 * s2) + 3.0 * std::exp(2.0 * s2) - 3.0;
}

MovementFeatures shape_features(const LognormalComponent& c)
{
    c.validate();
    const auto [t1, t2, t3] = characteristic_times(c);
    MovementFeatures f;
    f.rise_s = t2 - t1;
    f.drop_s = t3 - t2;
    f.width_s = f.rise_s + f.drop_s;
    f.skew = lognormal_skew(c.sigma);
    f.kurtosis = lognormal_kurtosis(c.sigma);
    f.mu = c.mu;
    f.sigma = c.sigma;
    f.D = c.D;
    return f;
}

FeatureSummary aggregate_features(std::span<const MovementFeatures> features)
{
    if (features.empty()) {
        throw PreconditionError("cannot aggregate an empty feature list");
    }
    FeatureSummary out;
    out.count = features.size();
    const double n = static_cast<double>(features.size());
    for (std::size_t k = 0; k < 8; ++k) {
        double sum = 0.0;
        for (const auto& f : features) {
            sum += feature_values(f)[k];
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& f : features) {
            const double d = feature_values(f)[k] - mean;
            ss += d * d;
        }
        out.fields[k] = MeanSd{mean, features.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
    }
    return out;
}

std::string feature_table_csv(std::span<const LabeledSummary> groups)
{
    std::string out = "parameter";
    for (const auto& g : groups) {
        out += "," + g.label + "_mean," + g.label + "_sd";
    }
    out.push_back('\n');
    for (std::size_t k = 0; k < kFeatureNames.size(); ++k) {
        out += kFeatureNames[k];
        for (const auto& g : groups) {
            out += "," + format_double(g.summary.fields[k].mean) + "," + format_double(g.summary.fields[k].sd);
        }
        out.push_back('\n');
    }
    return out;
}

std::string component_table_csv(const LognormalSequence& s)
{
    std::string out = "index,t0,D,mu,sigma,t3-t1,t2-t1,t3-t2,skew,kurtosis\n";
    std::size_t i = 0;
    for (const auto& c : s.components()) {
        const auto f = shape_features(c);
        out += std::to_string(i++);
        for (double v : {c.t0, c.D, c.mu, c.sigma, f.width_s, f.rise_s, f.drop_s, f.skew, f.kurtosis}) {
            out.push_back(',');
            out += format_double(v);
        }
        out.push_back('\n');
    }
    return out;
}

} // namespace operkit::lognormal
