#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "lm.hpp"
#include "mixlaw/fit.hpp"
#include "random.hpp"

namespace mixlaw {

namespace {

constexpr std::array<double, 4> kAlphaGrid{-1.0, -0.5, -0.2, -0.1};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

FitReport<PowerLaw> fit_power_law(std::span<const PowerPoint> points, const FitConfig& config) {
    config.validate();
    if (points.size() < 4) {
        fail(ErrorKind::InsufficientPoints,
             "power law: need at least 4 points for 3 coefficients, got " + std::to_string(points.size()));
    }
    std::set<double> distinct;
    for (const auto& p : points) {
        if (!(p.x > 0.0) || !std::isfinite(p.x)) fail(ErrorKind::InvalidArgument, "power law: x must be positive");
        if (!(p.loss > 0.0) || !std::isfinite(p.loss)) fail(ErrorKind::InvalidArgument, "power law: losses must be positive");
        distinct.insert(p.x);
    }
    if (distinct.size() == 1) fail(ErrorKind::Degenerate, "power law: all x values are equal");
    if (distinct.size() < 4) {
        fail(ErrorKind::InsufficientPoints,
             "power law: need at least 4 distinct x values, got " + std::to_string(distinct.size()));
    }

    const auto n = static_cast<Eigen::Index>(points.size());
    double log_ref = 0.0;
    for (const auto& p : points) log_ref += std::log(p.x);
    log_ref /= static_cast<double>(n);
    std::vector<double> u(points.size());
    std::vector<double> log_obs(points.size());
    double c_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        u[i] = std::log(points[i].x) - log_ref;
        log_obs[i] = std::log(points[i].loss);
        c_max = std::min(c_max, points[i].loss);
    }

    // params: [gamma, kappa, alpha] with c = c_max * sigmoid(gamma), k' = exp(kappa)
    // and pred = c + k' * exp(alpha * u).
    const detail::ResidualFn residuals = [&](std::span<const double> q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        const double sg = sigmoid(q[0]);
        const double c = c_max * sg;
        r.resize(n);
        if (J) J->resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double term = std::exp(q[1] + q[2] * u[i]);
            const double pred = c + term;
            r[i] = std::log(pred) - log_obs[i];
            if (J) {
                (*J)(i, 0) = c_max * sg * (1.0 - sg) / pred;
                (*J)(i, 1) = term / pred;
                (*J)(i, 2) = term * u[i] / pred;
            }
        }
    };

    detail::LmOptions options{config.huber_delta, config.max_iters, config.tol, {}};
    auto rng = detail::make_rng(config.seed, 0x706f776572ULL);
    detail::LmResult best;
    best.objective = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int start = 0; start < config.restarts; ++start) {
        const double alpha = kAlphaGrid[static_cast<std::size_t>(start) % kAlphaGrid.size()];
        const double draw = detail::uniform01(rng);
        const double frac = start == 0 ? 0.5 : 0.01 + 0.98 * draw;
        const double c0 = c_max * frac;
        double kappa = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) kappa += std::log(points[i].loss - c0) - alpha * u[i];
        kappa /= static_cast<double>(points.size());

        auto result = detail::minimize_huber_lm(residuals, {logit(frac), kappa, alpha}, options);
        ++used;
        if (result.objective < best.objective) best = std::move(result);
    }
    if (!std::isfinite(best.objective)) fail(ErrorKind::FitFailed, "power law: no restart produced a finite fit");

    FitReport<PowerLaw> report;
    report.model.c = c_max * sigmoid(best.params[0]);
    report.model.alpha = best.params[2];
    report.model.k = std::exp(best.params[1] - best.params[2] * log_ref);
    report.model.validate();
    double mae = 0.0;
    for (const auto& p : points) mae += std::abs(eval_power_law(report.model, p.x) - p.loss);
    report.train_mae = mae / static_cast<double>(points.size());
    report.objective = best.objective;
    report.converged = best.converged;
    report.restarts_used = used;
    return report;
}

}  // namespace mixlaw
