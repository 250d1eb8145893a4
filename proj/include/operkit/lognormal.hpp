#pragma once

#include "operkit/kinematics.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace operkit::lognormal {

/// One elemental movement of the sigma-lognormal model:
///   v(t) = D / (sigma sqrt(2 pi) (t - t0)) * exp(-(ln(t - t0) - mu)^2 / (2 sigma^2))
/// for t > t0, and 0 otherwise.
struct LognormalComponent {
    double t0 = 0.0;    // occurrence time, s
    double D = 1.0;     // area under the velocity profile
    double mu = 0.0;    // log-time delay
    double sigma = 0.1; // log-response time

    // Throws PreconditionError unless sigma > 0, D > 0 and all finite.
    void validate() const;

    bool operator==(const LognormalComponent&) const = default;
};

/// Components kept sorted by t0.
class LognormalSequence {
public:
    LognormalSequence() = default;
    explicit LognormalSequence(std::vector<LognormalComponent> components);

    const std::vector<LognormalComponent>& components() const noexcept { return components_; }
    std::size_t size() const noexcept { return components_.size(); }
    bool empty() const noexcept { return components_.empty(); }

    bool operator==(const LognormalSequence&) const = default;

private:
    std::vector<LognormalComponent> components_;
};

struct CharacteristicTimes {
    double t1; // start, t0 + e^(mu - 3 sigma)
    double t2; // velocity peak, t0 + e^(mu - sigma^2)
    double t3; // end, t0 + e^(mu + 3 sigma)
};

struct MovementFeatures {
    double width_s = 0.0;
    double rise_s = 0.0;
    double drop_s = 0.0;
    double skew = 0.0;
    double kurtosis = 3.0;
    double mu = 0.0;
    double sigma = 0.0;
    double D = 0.0;
};

inline constexpr std::array<const char*, 8> kFeatureNames{"t3-t1", "t2-t1", "t3-t2", "skew",
                                                          "kurtosis", "mu", "sigma", "D"};

std::array<double, 8> feature_values(const MovementFeatures& f);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

/// Per-field mean and sample (n-1) standard deviation, in kFeatureNames order.
struct FeatureSummary {
    std::size_t count = 0;
    std::array<MeanSd, 8> fields{};
};

double eval_component(const LognormalComponent& c, double t);

/// Partial derivatives of eval_component with respect to (t0, D, mu, sigma).
std::array<double, 4> component_gradient(const LognormalComponent& c, double t);

kinematics::VelocityTrace eval_sequence(const LognormalSequence& s, std::span<const double> grid);

/// Evaluates on the uniform grid t_start + i/rate, i < n.
kinematics::VelocityTrace eval_sequence(const LognormalSequence& s, double t_start, double rate_hz, std::size_t n);

CharacteristicTimes characteristic_times(const LognormalComponent& c);

/// Analytic lognormal skewness and (non-excess) kurtosis of sigma.
double lognormal_skew(double sigma);
double lognormal_kurtosis(double sigma);

MovementFeatures shape_features(const LognormalComponent& c);

/// Throws PreconditionError on an empty list.
FeatureSummary aggregate_features(std::span<const MovementFeatures> features);

/// Table layout: one row per parameter, "mean,sd" column pairs per group.
/// Header: "parameter,<label>_mean,<label>_sd,...".
struct LabeledSummary {
    std::string label;
    FeatureSummary summary;
};
std::string feature_table_csv(std::span<const LabeledSummary> groups);

/// Per-component rows: "index,t0,D,mu,sigma,t3-t1,t2-t1,t3-t2,skew,kurtosis".
std::string component_table_csv(const LognormalSequence& s);

} // namespace operkit::lognormal
