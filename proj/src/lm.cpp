#include "lm.hpp"

#include <cmath>
#include <limits>

namespace mixlaw::detail {

double mean_huber(const Eigen::VectorXd& residuals, double delta) {
    if (residuals.size() == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        const double a = std::abs(residuals[i]);
        total += a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
    }
    return total / static_cast<double>(residuals.size());
}

double penalized_objective(const Eigen::VectorXd& residuals, std::span<const double> params,
                           const LmOptions& options) {
    double f = mean_huber(residuals, options.huber_delta);
    for (std::size_t j = 0; j < options.ridge.size(); ++j) f += options.ridge[j] * params[j] * params[j];
    return f;
}

namespace {

// Solves (U^T U + diag(d)) x = -g. Uses the n x n Woodbury form when U has
// fewer rows than columns.
Eigen::VectorXd damped_solve(const Eigen::MatrixXd& U, const Eigen::VectorXd& d, const Eigen::VectorXd& g) {
    if (U.rows() >= U.cols()) {
        Eigen::MatrixXd A = U.transpose() * U;
        A.diagonal() += d;
        return A.ldlt().solve(-g);
    }
    const Eigen::VectorXd d_inv = d.cwiseInverse();
    const Eigen::VectorXd y = d_inv.cwiseProduct(g);
    Eigen::MatrixXd small = U * d_inv.asDiagonal() * U.transpose();
    small.diagonal().array() += 1.0;
    const Eigen::VectorXd z = small.ldlt().solve(U * y);
    return -(y - d_inv.cwiseProduct(U.transpose() * z));
}

}  // namespace

LmResult minimize_huber_lm(const ResidualFn& fn, std::vector<double> initial, const LmOptions& options) {
    const auto p = static_cast<Eigen::Index>(initial.size());
    const auto as_span = [p](const Eigen::VectorXd& v) { return std::span<const double>(v.data(), static_cast<std::size_t>(p)); };
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(initial.data(), p);
    Eigen::VectorXd ridge = Eigen::VectorXd::Zero(p);
    for (std::size_t j = 0; j < options.ridge.size() && static_cast<Eigen::Index>(j) < p; ++j) {
        ridge[static_cast<Eigen::Index>(j)] = options.ridge[j];
    }

    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    fn(as_span(x), r, &J);
    double f = penalized_objective(r, as_span(x), options);

    LmResult result;
    if (!std::isfinite(f)) {
        result.params = std::move(initial);
        result.objective = std::numeric_limits<double>::infinity();
        return result;
    }

    const double delta = options.huber_delta;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(r.size(), 1)));
    double lambda = 1e-3;
    Eigen::VectorXd rn;
    Eigen::VectorXd xn;
    int it = 0;
    for (; it < options.max_iters; ++it) {
        // IRLS weights turn the Huber loss into a weighted least-squares step.
        Eigen::VectorXd sqrt_w(r.size());
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const double a = std::abs(r[i]);
            sqrt_w[i] = std::sqrt(a <= delta ? 1.0 : delta / a);
        }
        const Eigen::MatrixXd U = (sqrt_w * inv_sqrt_n).asDiagonal() * J;
        const Eigen::VectorXd g =
            U.transpose() * (sqrt_w * inv_sqrt_n).cwiseProduct(r) + 2.0 * ridge.cwiseProduct(x);
        if (!g.allFinite()) break;
        if (g.lpNorm<Eigen::Infinity>() < 1e-300 || f < 1e-30) {
            result.converged = true;
            break;
        }
        const Eigen::VectorXd curvature = U.colwise().squaredNorm().transpose() + 2.0 * ridge;
        const Eigen::VectorXd scale = curvature.cwiseMax(1e-12 * std::max(1.0, curvature.maxCoeff()));

        bool accepted = false;
        double f_new = f;
        while (lambda < 1e16) {
            const Eigen::VectorXd step = damped_solve(U, 2.0 * ridge + lambda * scale, g);
            if (!step.allFinite()) {
                lambda *= 4.0;
                continue;
            }
            xn = x + step;
            fn(as_span(xn), rn, nullptr);
            f_new = penalized_objective(rn, as_span(xn), options);
            if (std::isfinite(f_new) && f_new < f) {
                accepted = true;
                lambda = std::max(lambda / 3.0, 1e-12);
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            // No descent at any damping: stationary point.
            result.converged = true;
            break;
        }
        const double improvement = (f - f_new) / std::max(f, std::numeric_limits<double>::min());
        const double step_norm = (xn - x).norm();
        x = xn;
        f = f_new;
        fn(as_span(x), r, &J);
        if (improvement < options.tol || step_norm < 1e-15 * (1.0 + x.norm())) {
            result.converged = true;
            ++it;
            break;
        }
    }
    result.params.assign(x.data(), x.data() + p);
    result.objective = f;
    result.iterations = it;
    return result;
}

}  // namespace mixlaw::detail
