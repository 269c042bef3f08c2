#pragma once

// Least-squares fitting of the three published curve models:
//
//   dip    y(d)     = B [1 - V exp(-(d - d0)^2 / (2 w^2))]
//   theta  y(theta) = C [(1 - 1.5 s)^2 + (3s - 1)(1 - s)(1 - EA)/2],
//          s = sin^2(4 theta), theta in degrees
//   fringe y(phi)   = C [1 + V4 cos(4 phi) + V2 cos(2 phi)], phi in radians
//
// The fringe model is linear in (C, C V4, C V2) and is solved exactly by
// normal equations; the others run Levenberg-Marquardt with a
// central-difference Jacobian. The mode-match parameter EA is kept inside
// [0, 1] by a logistic reparameterization during optimization.
//
// balance_theta1 reproduces the HWP1 adjustment: it scans theta1 around the
// coincidence-null angle, fits the fringe at each position, and minimizes
// |V2| on a grid followed by golden-section refinement.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fourphoton/scan.hpp"

namespace fourphoton {

enum class FitModel { dip, theta, fringe };

inline std::string fit_model_name(FitModel m) {
    switch (m) {
        case FitModel::dip: return "dip";
        case FitModel::theta: return "theta";
        case FitModel::fringe: return "fringe";
    }
    throw std::invalid_argument("fit_model_name: unknown model");
}

inline FitModel fit_model_from_name(const std::string& name) {
    if (name == "dip") return FitModel::dip;
    if (name == "theta") return FitModel::theta;
    if (name == "fringe") return FitModel::fringe;
    throw std::invalid_argument("unknown fit model '" + name + "' (expected dip|theta|fringe)");
}

struct FitOptions {
    bool weighted = false;        // minimize sum r^2 / max(y, 1)
    bool free_phase = false;      // fringe only: shared phase offset parameter
    std::vector<double> init;     // optional start values (external parameters)
    int max_iterations = 500;
    double rss_tol = 1e-12;       // relative RSS improvement
    double grad_tol = 1e-10;      // infinity norm of the gradient J^T W r
};

struct FitReport {
    FitModel model = FitModel::dip;
    std::vector<std::string> param_names;
    std::vector<double> params;
    std::vector<double> stderrs;
    double rss = 0.0;
    double r2 = 0.0;
    int iterations = 0;
    bool converged = false;

    double param(const std::string& name) const {
        for (size_t i = 0; i < param_names.size(); ++i)
            if (param_names[i] == name) return params[i];
        throw std::invalid_argument("FitReport: no parameter named '" + name + "'");
    }
    double stderr_of(const std::string& name) const {
        for (size_t i = 0; i < param_names.size(); ++i)
            if (param_names[i] == name) return stderrs[i];
        throw std::invalid_argument("FitReport: no parameter named '" + name + "'");
    }
};

inline double dip_fwhm_from_width(double w) { return 2.0 * std::sqrt(2.0 * std::log(2.0)) * std::abs(w); }
inline double dip_width_from_fwhm(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

inline std::vector<std::string> fit_param_names(FitModel model, bool free_phase = false) {
    switch (model) {
        case FitModel::dip: return {"B", "V", "delta0", "w"};
        case FitModel::theta: return {"C", "e_over_a"};
        case FitModel::fringe:
            return free_phase ? std::vector<std::string>{"C", "V4", "V2", "phi0"}
                              : std::vector<std::string>{"C", "V4", "V2"};
    }
    throw std::invalid_argument("fit_param_names: unknown model");
}

// Model value at x for external (reported) parameters.
inline double eval_model(FitModel model, std::span<const double> p, double x) {
    switch (model) {
        case FitModel::dip: {
            if (p.size() != 4) throw std::invalid_argument("dip model takes 4 parameters");
            const double dx = x - p[2];
            return p[0] * (1.0 - p[1] * std::exp(-dx * dx / (2.0 * p[3] * p[3])));
        }
        case FitModel::theta: {
            if (p.size() != 2) throw std::invalid_argument("theta model takes 2 parameters");
            const double s = std::pow(std::sin(4.0 * x * kDegToRad), 2);
            return p[0] * (std::pow(1.0 - 1.5 * s, 2) +
                           (3.0 * s - 1.0) * (1.0 - s) * (1.0 - p[1]) / 2.0);
        }
        case FitModel::fringe: {
            if (p.size() == 3)
                return p[0] * (1.0 + p[1] * std::cos(4.0 * x) + p[2] * std::cos(2.0 * x));
            if (p.size() == 4)
                return p[0] * (1.0 + p[1] * std::cos(4.0 * (x - p[3])) +
                               p[2] * std::cos(2.0 * (x - p[3])));
            throw std::invalid_argument("fringe model takes 3 or 4 parameters");
        }
    }
    throw std::invalid_argument("eval_model: unknown model");
}

namespace detail {

constexpr double kLogisticClamp = 1e-9;

inline double logit(double p) {
    const double c = std::clamp(p, kLogisticClamp, 1.0 - kLogisticClamp);
    return std::log(c / (1.0 - c));
}

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// theta model optimizes over logit(EA) so EA stays inside [0, 1].
inline std::vector<double> to_internal(FitModel model, std::vector<double> p) {
    if (model == FitModel::theta) p[1] = logit(p[1]);
    return p;
}

inline std::vector<double> to_external(FitModel model, std::vector<double> p) {
    if (model == FitModel::theta) p[1] = logistic(p[1]);
    if (model == FitModel::dip) p[3] = std::abs(p[3]);  // width enters squared
    return p;
}

inline double eval_internal(FitModel model, const std::vector<double>& p, double x) {
    if (model == FitModel::theta) {
        const double ext[2] = {p[0], logistic(p[1])};
        return eval_model(model, std::span<const double>(ext, 2), x);
    }
    return eval_model(model, std::span<const double>(p.data(), p.size()), x);
}

struct LmOutcome {
    std::vector<double> params;
    double weighted_rss = 0.0;
    int iterations = 0;
    bool converged = false;
};

template <typename F>
double weighted_rss_of(F&& f, std::span<const double> x, std::span<const double> y,
                       std::span<const double> w, const std::vector<double>& p) {
    double rss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f(p, x[i]);
        rss += w[i] * r * r;
    }
    return rss;
}

// Central-difference Jacobian of the model values, n x np.
template <typename F>
Eigen::MatrixXd central_jacobian(F&& f, std::span<const double> x, std::vector<double> p) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto np = static_cast<Eigen::Index>(p.size());
    Eigen::MatrixXd j(n, np);
    for (Eigen::Index c = 0; c < np; ++c) {
        const double saved = p[static_cast<size_t>(c)];
        const double h = std::sqrt(std::numeric_limits<double>::epsilon()) *
                         std::max(1.0, std::abs(saved));
        p[static_cast<size_t>(c)] = saved + h;
        for (Eigen::Index r = 0; r < n; ++r) j(r, c) = f(p, x[static_cast<size_t>(r)]);
        p[static_cast<size_t>(c)] = saved - h;
        for (Eigen::Index r = 0; r < n; ++r)
            j(r, c) = (j(r, c) - f(p, x[static_cast<size_t>(r)])) / (2.0 * h);
        p[static_cast<size_t>(c)] = saved;
    }
    return j;
}

template <typename F>
LmOutcome levenberg_marquardt(F&& f, std::span<const double> x, std::span<const double> y,
                              std::span<const double> w, std::vector<double> p,
                              const FitOptions& opt, const std::vector<double>& max_step = {}) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto np = static_cast<Eigen::Index>(p.size());
    double rss = weighted_rss_of(f, x, y, w, p);
    double lambda = 1e-3;
    LmOutcome out;

    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        out.iterations = iter;
        const Eigen::MatrixXd j = central_jacobian(f, x, p);
        Eigen::VectorXd residual(n);
        for (Eigen::Index i = 0; i < n; ++i)
            residual(i) = y[static_cast<size_t>(i)] - f(p, x[static_cast<size_t>(i)]);
        const Eigen::VectorXd wr =
            residual.cwiseProduct(Eigen::Map<const Eigen::VectorXd>(w.data(), n));
        const Eigen::VectorXd g = j.transpose() * wr;
        if (g.cwiseAbs().maxCoeff() < opt.grad_tol) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd a =
            j.transpose() * Eigen::Map<const Eigen::VectorXd>(w.data(), n).asDiagonal() * j;

        bool accepted = false;
        while (lambda < 1e14) {
            Eigen::MatrixXd damped = a;
            for (Eigen::Index d = 0; d < np; ++d)
                damped(d, d) += lambda * std::max(a(d, d), 1e-12);
            Eigen::VectorXd delta = damped.ldlt().solve(g);
            // reparameterized directions can go flat; capping the step keeps
            // the iterate where the gradient still carries information
            for (size_t d = 0; d < max_step.size(); ++d)
                delta(static_cast<Eigen::Index>(d)) =
                    std::clamp(delta(static_cast<Eigen::Index>(d)), -max_step[d], max_step[d]);
            std::vector<double> trial = p;
            for (Eigen::Index d = 0; d < np; ++d) trial[static_cast<size_t>(d)] += delta(d);
            const double trial_rss = weighted_rss_of(f, x, y, w, trial);
            if (std::isfinite(trial_rss) && trial_rss <= rss) {
                const double improvement =
                    (rss - trial_rss) / std::max(rss, std::numeric_limits<double>::min());
                p = std::move(trial);
                rss = trial_rss;
                lambda = std::max(lambda / 3.0, 1e-14);
                accepted = true;
                if (improvement < opt.rss_tol) out.converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted || out.converged) break;
    }
    out.params = std::move(p);
    out.weighted_rss = rss;
    return out;
}

}  // namespace detail

// Starting values estimated from the data itself; the fringe guess is already
// the exact linear-least-squares optimum.
inline std::vector<double> init_guess(std::span<const double> x, std::span<const double> y,
                                      FitModel model) {
    if (x.size() != y.size()) throw std::invalid_argument("init_guess: x/y size mismatch");
    if (x.size() < 4) throw std::invalid_argument("init_guess: need at least 4 rows");
    const auto [min_it, max_it] = std::minmax_element(y.begin(), y.end());
    if (*max_it == *min_it) throw std::invalid_argument("init_guess: flat data");

    switch (model) {
        case FitModel::dip: {
            const double baseline = *max_it;
            const double visibility = 1.0 - *min_it / baseline;
            const size_t dip_at = static_cast<size_t>(min_it - y.begin());
            const double center = x[dip_at];
            // half-depth crossings around the minimum give the width scale
            const double half_level = baseline - 0.5 * (baseline - *min_it);
            double left = x.front(), right = x.back();
            for (size_t i = dip_at; i-- > 0;) {
                if (y[i] >= half_level) {
                    const double t = (half_level - y[i]) / (y[i + 1] - y[i]);
                    left = x[i] + t * (x[i + 1] - x[i]);
                    break;
                }
            }
            for (size_t i = dip_at + 1; i < y.size(); ++i) {
                if (y[i] >= half_level) {
                    const double t = (half_level - y[i - 1]) / (y[i] - y[i - 1]);
                    right = x[i - 1] + t * (x[i] - x[i - 1]);
                    break;
                }
            }
            double width = (right - left) / (2.0 * std::sqrt(2.0 * std::log(2.0)));
            if (!(width > 0.0)) width = (x.back() - x.front()) / 4.0;
            return {baseline, visibility, center, width};
        }
        case FitModel::theta: {
            size_t near_zero = 0;
            for (size_t i = 1; i < x.size(); ++i)
                if (std::abs(x[i]) < std::abs(x[near_zero])) near_zero = i;
            const double scale = y[near_zero] != 0.0 ? y[near_zero] : *max_it;
            // clipped away from 0 and 1 so the logistic reparameterization
            // starts with a usable gradient
            const double ea = std::clamp(1.0 - 6.0 * (*min_it / *max_it), 0.05, 0.95);
            return {scale, ea};
        }
        case FitModel::fringe: {
            const auto n = static_cast<Eigen::Index>(x.size());
            Eigen::MatrixXd design(n, 3);
            Eigen::VectorXd rhs(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                design(i, 0) = 1.0;
                design(i, 1) = std::cos(4.0 * x[static_cast<size_t>(i)]);
                design(i, 2) = std::cos(2.0 * x[static_cast<size_t>(i)]);
                rhs(i) = y[static_cast<size_t>(i)];
            }
            const Eigen::Vector3d p = design.colPivHouseholderQr().solve(rhs);
            const double scale = p(0);
            if (scale == 0.0) throw std::invalid_argument("init_guess: fringe offset is zero");
            return {scale, p(1) / scale, p(2) / scale};
        }
    }
    throw std::invalid_argument("init_guess: unknown model");
}

inline FitReport fit(std::span<const double> x, std::span<const double> y, FitModel model,
                     const FitOptions& options = {}) {
    if (x.size() != y.size()) throw std::invalid_argument("fit: x/y size mismatch");
    if (options.free_phase && model != FitModel::fringe)
        throw std::invalid_argument("fit: free phase applies to the fringe model only");
    const size_t n_params = fit_param_names(model, options.free_phase).size();
    if (x.size() < n_params + 1)
        throw std::invalid_argument("fit: need more rows than parameters");

    std::vector<double> weights(x.size(), 1.0);
    if (options.weighted)
        for (size_t i = 0; i < y.size(); ++i) weights[i] = 1.0 / std::max(y[i], 1.0);

    FitReport report;
    report.model = model;
    report.param_names = fit_param_names(model, options.free_phase);

    std::vector<double> start;
    if (!options.init.empty()) {
        if (options.init.size() != n_params)
            throw std::invalid_argument("fit: wrong number of initial parameters");
        start = options.init;
    } else {
        start = init_guess(x, y, model);
        if (options.free_phase) start.push_back(0.0);
    }

    const bool linear_fringe = (model == FitModel::fringe && !options.free_phase);
    if (linear_fringe && options.init.empty()) {
        // init_guess already solved the normal equations exactly
        report.params = start;
        report.iterations = 1;
        report.converged = std::isfinite(start[0]) && start[0] > 0.0;
    } else {
        const auto f = [model](const std::vector<double>& p, double xi) {
            return detail::eval_internal(model, p, xi);
        };
        const double inf = std::numeric_limits<double>::infinity();
        const std::vector<double> max_step =
            model == FitModel::theta ? std::vector<double>{inf, 8.0} : std::vector<double>{};
        const detail::LmOutcome lm = detail::levenberg_marquardt(
            f, x, y, std::span<const double>(weights), detail::to_internal(model, start),
            options, max_step);
        report.params = detail::to_external(model, lm.params);
        report.iterations = lm.iterations;
        report.converged = lm.converged;
    }

    // diagnostics against the external parameters at the solution
    double rss = 0.0, weighted_rss = 0.0, mean_y = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - eval_model(model, report.params, x[i]);
        rss += r * r;
        weighted_rss += weights[i] * r * r;
        mean_y += y[i];
    }
    mean_y /= static_cast<double>(y.size());
    double tss = 0.0;
    for (double yi : y) tss += (yi - mean_y) * (yi - mean_y);
    report.rss = rss;
    report.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;

    const auto ext_eval = [model](const std::vector<double>& p, double xi) {
        return eval_model(model, std::span<const double>(p.data(), p.size()), xi);
    };
    const Eigen::MatrixXd j = detail::central_jacobian(ext_eval, x, report.params);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                                static_cast<Eigen::Index>(weights.size()));
    const Eigen::MatrixXd normal = j.transpose() * w.asDiagonal() * j;
    const double dof = static_cast<double>(x.size()) - static_cast<double>(n_params);
    const double sigma2 = dof > 0.0 ? weighted_rss / dof : 0.0;
    const Eigen::MatrixXd cov =
        sigma2 * normal.ldlt().solve(Eigen::MatrixXd::Identity(normal.rows(), normal.cols()));
    report.stderrs.resize(n_params);
    for (size_t i = 0; i < n_params; ++i) {
        const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        report.stderrs[i] = v > 0.0 ? std::sqrt(v) : 0.0;
    }
    return report;
}

inline FitReport fit(const ScanTable& table, FitModel model, const FitOptions& options = {}) {
    std::vector<double> y;
    if (table.has_counts()) {
        y.reserve(table.counts.size());
        for (auto c : table.counts) y.push_back(static_cast<double>(c));
    } else {
        y = table.probability;
    }
    return fit(std::span<const double>(table.x), std::span<const double>(y), model, options);
}

// Golden-section minimization of a unimodal function on [a, b].
inline std::pair<double, double> golden_section_minimize(
    const std::function<double(double)>& f, double a, double b, double xtol,
    int max_iterations = 200) {
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);  // 0.618...
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < max_iterations && (b - a) > xtol; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

struct BalanceResult {
    double theta1 = 0.0;  // radians
    double v2 = 0.0;
    double v4 = 0.0;
    bool balanced = false;
    FitReport fit;
};

namespace detail {

inline FitReport fringe_fit_at_theta1(const SchmidtSpec& source, double theta1, int phi_steps) {
    ScanConfig cfg;
    cfg.source.kind = SourceSpec::Kind::schmidt;
    cfg.source.lambdas = source.lambdas;
    cfg.theta1 = theta1;
    cfg.theta2 = 22.5 * kDegToRad;
    cfg.variable = SweepVariable::phi;
    cfg.sweep_from = 0.0;
    cfg.sweep_to = 2.0 * kPi * (phi_steps - 1) / phi_steps;  // one full period, no repeat
    cfg.steps = phi_steps;
    return fit(fringe_scan(cfg), FitModel::fringe);
}

}  // namespace detail

// Finds the HWP1 angle that nulls the cos(2 phi) fringe component for the
// given source: 0.05-degree grid over null angle +/- 3 degrees, then
// golden-section refinement of |V2|.
inline BalanceResult balance_theta1(const SchmidtSpec& source, double tolerance = 0.02) {
    source.validate();
    if (tolerance < 0.0) throw std::invalid_argument("balance_theta1: negative tolerance");
    constexpr int kPhiSteps = 48;
    const auto v2_at = [&source](double theta1) {
        return std::abs(detail::fringe_fit_at_theta1(source, theta1, kPhiSteps).param("V2"));
    };

    const double center = hom_null_hwp_angle();
    const double half_span = 3.0 * kDegToRad;
    const double step = 0.05 * kDegToRad;
    double best_theta = center;
    double best_v2 = v2_at(center);
    const int half_steps = static_cast<int>(std::round(half_span / step));
    for (int i = -half_steps; i <= half_steps; ++i) {
        const double theta = center + i * step;
        const double v2 = v2_at(theta);
        if (v2 < best_v2) {
            best_v2 = v2;
            best_theta = theta;
        }
    }
    const auto [theta_opt, v2_opt] =
        golden_section_minimize(v2_at, best_theta - step, best_theta + step, 1e-11);

    BalanceResult result;
    result.fit = detail::fringe_fit_at_theta1(source, theta_opt, kPhiSteps);
    result.theta1 = theta_opt;
    result.v2 = result.fit.param("V2");
    result.v4 = result.fit.param("V4");
    result.balanced = std::abs(result.v2) <= tolerance;
    return result;
}

}  // namespace fourphoton
