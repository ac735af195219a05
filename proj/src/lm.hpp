#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) on a mean Huber objective,
// solved by iteratively reweighted least squares. Internal to the library.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace mixlaw::detail {

// Fills `residuals` and, when `jacobian` is non-null, the n x p Jacobian.
using ResidualFn = std::function<void(std::span<const double> params, Eigen::VectorXd& residuals,
                                      Eigen::MatrixXd* jacobian)>;

struct LmOptions {
    double huber_delta = 1e-3;
    int max_iters = 500;
    double tol = 1e-12;
    // Optional per-parameter ridge weights: adds sum_j ridge_j * q_j^2.
    std::vector<double> ridge;
};

struct LmResult {
    std::vector<double> params;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

double mean_huber(const Eigen::VectorXd& residuals, double delta);

// Objective minimized by minimize_huber_lm: mean Huber plus the ridge term.
double penalized_objective(const Eigen::VectorXd& residuals, std::span<const double> params,
                           const LmOptions& options);

LmResult minimize_huber_lm(const ResidualFn& fn, std::vector<double> initial, const LmOptions& options);

}  // namespace mixlaw::detail
