#include "operkit/extraction.hpp"

#include "operkit/error.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

namespace operkit::extraction {

using lognormal::LognormalComponent;
using lognormal::LognormalSequence;

namespace {

constexpr double kSigmaMin = 1e-3;
constexpr double kSigmaMax = 1.0;
constexpr double kMuMin = -12.0;
// Beyond 8 sigma in log-time the profile is below e^-32 of its scale.
constexpr double kSupportSigmas = 8.0;

const double kHalfHeight = std::sqrt(2.0 * std::numbers::ln2);

struct SampleRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool empty() const noexcept { return begin >= end; }
};

struct Grid {
    double t_start;
    double rate;

    double time_at(std::size_t i) const noexcept { return t_start + static_cast<double>(i) / rate; }
};

SampleRange support(const LognormalComponent& c, const Grid& g, std::size_t lo, std::size_t hi)
{
    const double t_first = c.t0 + std::exp(c.mu - kSupportSigmas * c.sigma);
    const double t_last = c.t0 + std::exp(std::min(c.mu + kSupportSigmas * c.sigma, 30.0));
    const double s = std::ceil((t_first - g.t_start) * g.rate);
    const double e = std::floor((t_last - g.t_start) * g.rate) + 1.0;
    SampleRange r;
    r.begin = s <= static_cast<double>(lo) ? lo : static_cast<std::size_t>(std::min(s, static_cast<double>(hi)));
    r.end = e >= static_cast<double>(hi) ? hi : static_cast<std::size_t>(std::max(e, static_cast<double>(lo)));
    return r;
}

struct Bounds {
    double t0_min;
    double t0_max;
    double mu_max;
    double d_min;
};

void clamp(LognormalComponent& c, const Bounds& b)
{
    c.t0 = std::clamp(c.t0, b.t0_min, b.t0_max);
    c.D = std::max(c.D, b.d_min);
    c.mu = std::clamp(c.mu, kMuMin, b.mu_max);
    c.sigma = std::clamp(c.sigma, kSigmaMin, kSigmaMax);
}

// Least-squares target on [lo, hi) of a uniform grid.
struct FitProblem {
    std::span<const double> target;
    Grid grid;
    std::size_t lo;
    std::size_t hi;
    Bounds bounds;
};

struct FitOutcome {
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

double model_cost(const std::vector<LognormalComponent>& comps, const FitProblem& p, std::vector<double>& model)
{
    model.assign(p.hi - p.lo, 0.0);
    for (const auto& c : comps) {
        const auto r = support(c, p.grid, p.lo, p.hi);
        for (std::size_t i = r.begin; i < r.end; ++i) {
            model[i - p.lo] += lognormal::eval_component(c, p.grid.time_at(i));
        }
    }
    double cost = 0.0;
    for (std::size_t i = p.lo; i < p.hi; ++i) {
        const double d = p.target[i] - model[i - p.lo];
        cost += d * d;
    }
    return cost;
}

FitOutcome levenberg_marquardt(std::vector<LognormalComponent>& comps, const FitProblem& p, int max_iter)
{
    FitOutcome out;
    const std::size_t m = comps.size();
    std::vector<double> model;
    double cost = model_cost(comps, p, model);
    out.initial_cost = cost;
    out.final_cost = cost;
    if (m == 0 || p.hi <= p.lo) {
        out.converged = true;
        return out;
    }
    double target_energy = 0.0;
    for (std::size_t i = p.lo; i < p.hi; ++i) {
        target_energy += p.target[i] * p.target[i];
    }

    const auto dim = static_cast<Eigen::Index>(4 * m);
    double lambda = 1e-3;
    std::vector<SampleRange> ranges(m);
    std::vector<std::vector<std::array<double, 4>>> grads(m);
    std::vector<std::size_t> order(m);

    while (out.iterations < max_iter) {
        if (cost <= 1e-28 * target_energy) {
            out.converged = true;
            break;
        }
        ++out.iterations;

        // Jacobian columns restricted to each component's support.
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        for (std::size_t c = 0; c < m; ++c) {
            ranges[c] = support(comps[c], p.grid, p.lo, p.hi);
            grads[c].resize(ranges[c].end > ranges[c].begin ? ranges[c].end - ranges[c].begin : 0);
            for (std::size_t i = ranges[c].begin; i < ranges[c].end; ++i) {
                const auto gr = lognormal::component_gradient(comps[c], p.grid.time_at(i));
                grads[c][i - ranges[c].begin] = gr;
                const double r = p.target[i] - model[i - p.lo];
                for (int k = 0; k < 4; ++k) {
                    g(static_cast<Eigen::Index>(4 * c + k)) += gr[k] * r;
                }
            }
        }

        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ranges[a].begin != ranges[b].begin ? ranges[a].begin < ranges[b].begin : a < b;
        });
        std::vector<Eigen::Triplet<double>> triplets;
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
        for (std::size_t oi = 0; oi < m; ++oi) {
            const std::size_t a = order[oi];
            for (std::size_t oj = oi; oj < m; ++oj) {
                const std::size_t b = order[oj];
                if (oj != oi && ranges[b].begin >= ranges[a].end) {
                    break;
                }
                const std::size_t s = std::max(ranges[a].begin, ranges[b].begin);
                const std::size_t e = std::min(ranges[a].end, ranges[b].end);
                if (s >= e) {
                    continue;
                }
                double block[4][4] = {};
                for (std::size_t i = s; i < e; ++i) {
                    const auto& ga = grads[a][i - ranges[a].begin];
                    const auto& gb = grads[b][i - ranges[b].begin];
                    for (int k = 0; k < 4; ++k) {
                        for (int l = 0; l < 4; ++l) {
                            block[k][l] += ga[k] * gb[l];
                        }
                    }
                }
                for (int k = 0; k < 4; ++k) {
                    for (int l = 0; l < 4; ++l) {
                        const auto row = static_cast<Eigen::Index>(4 * a + k);
                        const auto col = static_cast<Eigen::Index>(4 * b + l);
                        triplets.emplace_back(row, col, block[k][l]);
                        if (a != b) {
                            triplets.emplace_back(col, row, block[k][l]);
                        } else if (k == l) {
                            diag(row) = block[k][k];
                        }
                    }
                }
            }
        }
        Eigen::SparseMatrix<double> hessian(dim, dim);
        hessian.setFromTriplets(triplets.begin(), triplets.end());
        const double diag_floor = std::max(diag.maxCoeff(), std::numeric_limits<double>::min()) * 1e-12;

        bool accepted = false;
        while (!accepted && lambda < 1e16) {
            Eigen::SparseMatrix<double> a = hessian;
            for (Eigen::Index k = 0; k < dim; ++k) {
                a.coeffRef(k, k) += lambda * std::max(diag(k), diag_floor) + diag_floor;
            }
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
            if (solver.info() != Eigen::Success) {
                lambda *= 4.0;
                continue;
            }
            const Eigen::VectorXd step = solver.solve(g);
            std::vector<LognormalComponent> trial = comps;
            double max_rel = 0.0;
            for (std::size_t c = 0; c < m; ++c) {
                const auto base = static_cast<Eigen::Index>(4 * c);
                trial[c].t0 += step(base);
                trial[c].D += step(base + 1);
                trial[c].mu += step(base + 2);
                trial[c].sigma += step(base + 3);
                clamp(trial[c], p.bounds);
                max_rel = std::max({max_rel, std::abs(trial[c].t0 - comps[c].t0) / std::exp(comps[c].mu),
                                    std::abs(trial[c].D - comps[c].D) / comps[c].D,
                                    std::abs(trial[c].mu - comps[c].mu),
                                    std::abs(trial[c].sigma - comps[c].sigma) / comps[c].sigma});
            }
            std::vector<double> trial_model;
            const double trial_cost = model_cost(trial, p, trial_model);
            if (std::isfinite(trial_cost) && trial_cost < cost) {
                const double gain = (cost - trial_cost) / cost;
                comps = std::move(trial);
                model = std::move(trial_model);
                cost = trial_cost;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (gain < 1e-12 || max_rel < 1e-12) {
                    out.converged = true;
                }
            } else {
                lambda *= 4.0;
            }
        }
        if (!accepted) {
            // No descent direction left at any damping: a stationary point.
            out.converged = true;
        }
        if (out.converged) {
            break;
        }
    }
    out.final_cost = cost;
    return out;
}

Bounds trace_bounds(std::span<const double> target, const Grid& g, std::size_t n)
{
    const double t_end = g.time_at(n == 0 ? 0 : n - 1);
    double peak = 0.0;
    for (double v : target) {
        peak = std::max(peak, std::abs(v));
    }
    const double span = std::max(t_end - g.t_start, 1.0 / g.rate);
    return Bounds{g.t_start, t_end, std::log(span) + 2.0,
                  std::max(peak, std::numeric_limits<double>::min()) * 1e-12 / g.rate};
}

std::pair<std::size_t, std::size_t> interior(const kinematics::VelocityTrace& v)
{
    const std::size_t n = v.size();
    const std::size_t edge = std::min(v.transient_samples, n / 2);
    return {edge, n - edge};
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

} // namespace

void ExtractionConfig::validate() const
{
    if (!(snr_target_db > 0.0)) {
        throw PreconditionError("snr_target_db must be positive");
    }
    if (max_components && *max_components < 1) {
        throw PreconditionError("max_components must be at least 1");
    }
    if (!(min_peak_fraction > 0.0 && min_peak_fraction < 1.0)) {
        throw PreconditionError("min_peak_fraction must lie in (0, 1)");
    }
    if (refine_max_iter < 1) {
        throw PreconditionError("refine_max_iter must be positive");
    }
}

std::size_t ExtractionConfig::component_cap(double trace_seconds) const
{
    if (max_components) {
        return *max_components;
    }
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(4.0 * trace_seconds)));
}

std::optional<Lobe> measure_lobe(std::span<const double> signal, double t_start, double rate_hz,
                                 std::size_t peak_index, std::size_t lo, std::size_t hi)
{
    if (peak_index <= lo || peak_index + 1 >= hi || peak_index >= signal.size()) {
        return std::nullopt;
    }
    const double y0 = signal[peak_index - 1];
    const double y1 = signal[peak_index];
    const double y2 = signal[peak_index + 1];
    if (!(y1 > 0.0) || y1 < y0 || y1 < y2 || (y1 == y0 && y1 == y2)) {
        return std::nullopt;
    }

    // Parabolic refinement of the sampled maximum.
    const double curvature = y0 - 2.0 * y1 + y2;
    double offset = 0.0;
    double peak = y1;
    if (curvature < 0.0) {
        offset = std::clamp(0.5 * (y0 - y2) / curvature, -0.5, 0.5);
        peak = y1 - 0.25 * (y0 - y2) * offset;
    }
    const double half = 0.5 * peak;
    const Grid g{t_start, rate_hz};

    std::size_t j = peak_index;
    while (j > lo && signal[j - 1] > half) {
        --j;
        if (signal[j] > peak * (1.0 + 1e-9)) {
            return std::nullopt;
        }
    }
    if (j == lo) {
        return std::nullopt;
    }
    const double left = g.time_at(j - 1) + (half - signal[j - 1]) / (signal[j] - signal[j - 1]) / rate_hz;

    std::size_t k = peak_index;
    while (k + 1 < hi && signal[k + 1] > half) {
        ++k;
        if (signal[k] > peak * (1.0 + 1e-9)) {
            return std::nullopt;
        }
    }
    if (k + 1 >= hi) {
        return std::nullopt;
    }
    const double right = g.time_at(k) + (signal[k] - half) / (signal[k] - signal[k + 1]) / rate_hz;

    // Trapezoid over the samples inside the crossings plus the two end slivers.
    double area = 0.0;
    for (std::size_t i = j; i < k; ++i) {
        area += 0.5 * (signal[i] + signal[i + 1]) / rate_hz;
    }
    area += 0.5 * (half + signal[j]) * (g.time_at(j) - left);
    area += 0.5 * (half + signal[k]) * (right - g.time_at(k));

    Lobe lobe;
    lobe.peak_time = g.time_at(peak_index) + offset / rate_hz;
    lobe.peak_value = peak;
    lobe.left_half_time = left;
    lobe.right_half_time = right;
    lobe.area = area;
    return lobe;
}

std::optional<LognormalComponent> estimate_initial(const Lobe& lobe, double t_min)
{
    const double left = lobe.peak_time - lobe.left_half_time;
    const double right = lobe.right_half_time - lobe.peak_time;
    if (!(left > 0.0) || !(right > 0.0) || !(lobe.peak_value > 0.0) || !(lobe.area > 0.0)) {
        return std::nullopt;
    }

    // In log-time the profile is a Gaussian centred on the mode, so the half
    // height sits at ln(tau_mode) -/+ a with right/left = e^a.
    double a = std::max(std::log(right / left), 0.0);
    const double room = lobe.peak_time - t_min;
    if (!(room > left)) {
        return std::nullopt;
    }
    a = std::max(a, -std::log1p(-left / room));
    double sigma = std::clamp(a / kHalfHeight, kSigmaMin, kSigmaMax);
    a = sigma * kHalfHeight;

    const double tau_mode = left / -std::expm1(-a);
    LognormalComponent c;
    c.t0 = lobe.peak_time - tau_mode;
    c.sigma = sigma;
    c.mu = std::log(tau_mode) + sigma * sigma;
    const double fraction = normal_cdf(kHalfHeight - sigma) - normal_cdf(-kHalfHeight - sigma);
    c.D = lobe.area / fraction;
    return c;
}

RefineResult refine_sequence(const LognormalSequence& seq, const kinematics::VelocityTrace& v,
                             const ExtractionConfig& cfg)
{
    cfg.validate();
    if (seq.empty()) {
        throw PreconditionError("refine_sequence needs at least one component");
    }
    const auto [lo, hi] = interior(v);
    const Grid grid{v.t_start_s, v.rate_hz};
    FitProblem problem{v.values, grid, lo, hi, trace_bounds(v.values, grid, v.size())};

    std::vector<LognormalComponent> comps = seq.components();
    for (auto& c : comps) {
        clamp(c, problem.bounds);
    }
    const auto fit = levenberg_marquardt(comps, problem, cfg.refine_max_iter);
    RefineResult out;
    out.sequence = LognormalSequence(std::move(comps));
    out.initial_cost = fit.initial_cost;
    out.final_cost = fit.final_cost;
    out.iterations = fit.iterations;
    out.converged = fit.converged;
    return out;
}

double reconstruction_snr(std::span<const double> v, std::span<const double> recon)
{
    if (v.size() != recon.size()) {
        throw PreconditionError("reconstruction_snr: length mismatch");
    }
    double signal = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        signal += v[i] * v[i];
        error += (v[i] - recon[i]) * (v[i] - recon[i]);
    }
    if (signal == 0.0) {
        throw PreconditionError("reconstruction_snr: zero-norm signal");
    }
    if (error == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(signal / error);
}

ExtractionResult decompose(const kinematics::VelocityTrace& v, const ExtractionConfig& cfg)
{
    cfg.validate();
    ExtractionResult result;
    const std::size_t n = v.size();
    const auto [lo, hi] = interior(v);

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::abs(v.values[i]);
    }
    double energy = 0.0;
    double peak = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        energy += y[i] * y[i];
        peak = std::max(peak, y[i]);
    }
    if (energy == 0.0) {
        result.zero_trace = true;
        result.snr_db = 0.0;
        return result;
    }

    const Grid grid{v.t_start_s, v.rate_hz};
    const Bounds bounds = trace_bounds(y, grid, n);
    const std::size_t cap = cfg.component_cap(static_cast<double>(hi - lo) / v.rate_hz);
    const double floor_value = cfg.min_peak_fraction * peak;
    const std::span<const double> y_view{y.data(), y.size()};

    std::vector<LognormalComponent> comps;
    std::vector<double> model(n, 0.0);
    std::vector<double> residual(n, 0.0);
    std::set<std::size_t> skipped;

    auto add_into = [&](std::vector<double>& dst, const LognormalComponent& c, double sign, std::size_t a,
                        std::size_t b) {
        const auto r = support(c, grid, a, b);
        for (std::size_t i = r.begin; i < r.end; ++i) {
            dst[i] += sign * lognormal::eval_component(c, grid.time_at(i));
        }
    };

    auto snr_now = [&]() {
        double err = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            err += (y[i] - model[i]) * (y[i] - model[i]);
        }
        return err == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(energy / err);
    };

    while (comps.size() < cap) {
        if (snr_now() >= cfg.snr_target_db) {
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = y[i] - model[i];
        }
        std::optional<std::size_t> best;
        for (std::size_t i = lo + 1; i + 1 < hi; ++i) {
            const double r = residual[i];
            if (r < floor_value || r < residual[i - 1] || r <= residual[i + 1] || skipped.count(i)) {
                continue;
            }
            if (!best || r > residual[*best]) {
                best = i;
            }
        }
        if (!best) {
            break;
        }
        const auto lobe = measure_lobe(residual, grid.t_start, grid.rate, *best, lo, hi);
        const auto initial = lobe ? estimate_initial(*lobe, bounds.t0_min) : std::nullopt;
        if (!initial) {
            skipped.insert(*best);
            continue;
        }
        LognormalComponent fresh = *initial;
        clamp(fresh, bounds);

        // Refine the new component jointly with every component whose
        // support overlaps it; the rest stay fixed as background.
        const auto fresh_range = support(fresh, grid, lo, hi);
        std::vector<std::size_t> active_idx;
        SampleRange fit_range = fresh_range;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            const auto r = support(comps[c], grid, lo, hi);
            if (r.begin < fresh_range.end && fresh_range.begin < r.end) {
                active_idx.push_back(c);
                fit_range.begin = std::min(fit_range.begin, r.begin);
                fit_range.end = std::max(fit_range.end, r.end);
            }
        }
        if (fit_range.empty()) {
            skipped.insert(*best);
            continue;
        }
        std::vector<double> target(n, 0.0);
        std::vector<char> is_active(comps.size(), 0);
        for (std::size_t c : active_idx) {
            is_active[c] = 1;
        }
        for (std::size_t i = fit_range.begin; i < fit_range.end; ++i) {
            target[i] = y[i];
        }
        for (std::size_t c = 0; c < comps.size(); ++c) {
            if (!is_active[c]) {
                add_into(target, comps[c], -1.0, fit_range.begin, fit_range.end);
            }
        }
        double before = 0.0;
        for (std::size_t i = fit_range.begin; i < fit_range.end; ++i) {
            before += (y[i] - model[i]) * (y[i] - model[i]);
        }

        std::vector<LognormalComponent> local;
        for (std::size_t c : active_idx) {
            local.push_back(comps[c]);
        }
        local.push_back(fresh);
        FitProblem problem{target, grid, fit_range.begin, fit_range.end, bounds};
        const auto fit = levenberg_marquardt(local, problem, cfg.refine_max_iter);
        if (!(fit.final_cost < before * (1.0 - 1e-9))) {
            skipped.insert(*best);
            continue;
        }
        for (std::size_t k = 0; k < active_idx.size(); ++k) {
            add_into(model, comps[active_idx[k]], -1.0, 0, n);
            comps[active_idx[k]] = local[k];
            add_into(model, local[k], 1.0, 0, n);
        }
        comps.push_back(local.back());
        add_into(model, local.back(), 1.0, 0, n);
    }

    if (!comps.empty()) {
        FitProblem problem{y_view, grid, lo, hi, bounds};
        const auto fit = levenberg_marquardt(comps, problem, cfg.refine_max_iter);
        result.refine_converged = fit.converged;
    }
    result.sequence = LognormalSequence(std::move(comps));

    const auto recon = lognormal::eval_sequence(result.sequence, v.t_start_s, v.rate_hz, n);
    double err = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        err += (y[i] - recon.values[i]) * (y[i] - recon.values[i]);
    }
    result.snr_db = err == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(energy / err);
    result.residual_rms = std::sqrt(err / static_cast<double>(hi - lo));
    return result;
}

std::string result_json(const ExtractionResult& result)
{
    nlohmann::ordered_json j;
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& c : result.sequence.components()) {
        j["components"].push_back({{"t0", c.t0}, {"D", c.D}, {"mu", c.mu}, {"sigma", c.sigma}});
    }
    if (std::isfinite(result.snr_db)) {
        j["snr_db"] = result.snr_db;
    } else {
        j["snr_db"] = "inf";
    }
    j["residual_rms"] = result.residual_rms;
    j["zero_trace"] = result.zero_trace;
    j["refine_converged"] = result.refine_converged;
    return j.dump(2) + "\n";
}

} // namespace operkit::extraction
