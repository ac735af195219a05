#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "lm.hpp"
#include "mixlaw/fit.hpp"
#include "random.hpp"

namespace mixlaw {

namespace {

constexpr std::array<double, 11> kSlopeGrid{-10.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
constexpr std::size_t kMinImplicitRecords = 8;
constexpr int kWarmupIters = 300;
constexpr int kRefineIters = 150;

void softmax(std::span<const double> logits, std::span<double> out) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        total += out[i];
    }
    for (auto& v : out) v /= total;
}

// Full-batch Adam with a cosine-decayed step size.
struct Adam {
    double lr0 = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-12;
    std::vector<double> m, v;

    void step(std::span<double> params, std::span<const double> grad, int t, int horizon) {
        if (m.empty()) {
            m.assign(params.size(), 0.0);
            v.assign(params.size(), 0.0);
        }
        const double progress = std::min(1.0, static_cast<double>(t) / static_cast<double>(horizon));
        const double lr = lr0 * (1e-3 + (1.0 - 1e-3) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
        const double b1t = 1.0 - std::pow(beta1, t);
        const double b2t = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + eps);
        }
    }
};

bool usable(std::span<const double> params, std::size_t K, std::size_t stride) {
    if (!std::all_of(params.begin(), params.end(), [](double q) { return std::isfinite(q); })) return false;
    for (std::size_t i = 0; i < K; ++i) {
        if (!std::isfinite(std::exp(params[i * stride])) || !std::isfinite(std::exp(params[i * stride + 1]))) return false;
        if (!(std::exp(params[i * stride + 1]) > 0.0)) return false;
    }
    return true;
}

}  // namespace

ImplicitObjective::ImplicitObjective(std::span<const MixtureSample> samples, std::size_t K, double huber_delta,
                                     double slope_ridge)
    : K_(K), m_(samples.empty() ? 0 : samples.front().mixture.size()), delta_(huber_delta), ridge_(slope_ridge) {
    if (samples.empty()) fail(ErrorKind::InsufficientPoints, "implicit objective: no samples");
    if (K_ < 1) fail(ErrorKind::InvalidArgument, "implicit objective: K must be >= 1");
    rows_.reserve(samples.size() * m_);
    for (const auto& s : samples) {
        if (s.mixture.size() != m_) fail(ErrorKind::DimensionMismatch, "implicit objective: samples disagree on M");
        const auto p = s.mixture.proportions();
        rows_.insert(rows_.end(), p.begin(), p.end());
        targets_.push_back(s.loss);
    }
}

double ImplicitObjective::value(std::span<const double> params) const {
    std::vector<double> scratch(parameter_count());
    return value_and_gradient(params, scratch);
}

double ImplicitObjective::value_and_gradient(std::span<const double> params, std::span<double> gradient) const {
    if (params.size() != parameter_count() || gradient.size() != parameter_count()) {
        fail(ErrorKind::DimensionMismatch, "implicit objective: wrong parameter count");
    }
    const std::size_t stride = m_ + 2;
    std::vector<double> s(K_);
    softmax(params.subspan(K_ * stride, K_), s);
    std::vector<double> c(K_), k(K_);
    for (std::size_t i = 0; i < K_; ++i) {
        c[i] = std::exp(params[i * stride]);
        k[i] = std::exp(params[i * stride + 1]);
    }
    std::fill(gradient.begin(), gradient.end(), 0.0);

    const std::size_t n = targets_.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> domain_loss(K_), domain_exp(K_), slope(K_);
    double total = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
        const double* r = &rows_[row * m_];
        double pred = 0.0;
        for (std::size_t i = 0; i < K_; ++i) {
            const double* t = &params[i * stride + 2];
            double z = 0.0;
            for (std::size_t j = 0; j < m_; ++j) z += t[j] * r[j];
            const bool clamped = z > kExpClamp || z < -kExpClamp;
            domain_exp[i] = k[i] * clamped_exp(z);
            slope[i] = clamped ? 0.0 : domain_exp[i];
            domain_loss[i] = c[i] + domain_exp[i];
            pred += s[i] * domain_loss[i];
        }
        const double residual = pred - targets_[row];
        total += huber(residual, delta_);
        const double dpred = std::clamp(residual, -delta_, delta_) * inv_n;
        for (std::size_t i = 0; i < K_; ++i) {
            double* g = &gradient[i * stride];
            const double w = dpred * s[i];
            g[0] += w * c[i];
            g[1] += w * domain_exp[i];
            for (std::size_t j = 0; j < m_; ++j) g[2 + j] += w * slope[i] * r[j];
            gradient[K_ * stride + i] += w * (domain_loss[i] - pred);
        }
    }
    double penalty = 0.0;
    for (std::size_t i = 0; i < K_; ++i) {
        for (std::size_t j = 0; j < m_; ++j) {
            const double t = params[i * stride + 2 + j];
            penalty += t * t;
            gradient[i * stride + 2 + j] += 2.0 * ridge_ * t;
        }
    }
    return total * inv_n + ridge_ * penalty;
}

std::vector<double> ImplicitObjective::residuals(std::span<const double> params) const {
    const auto model = to_model(params);
    std::vector<double> out(targets_.size());
    for (std::size_t row = 0; row < targets_.size(); ++row) {
        out[row] = eval_model(model, std::span<const double>(&rows_[row * m_], m_)).overall - targets_[row];
    }
    return out;
}

MixingLawModel ImplicitObjective::to_model(std::span<const double> params,
                                           std::vector<std::string> training_domains) const {
    if (params.size() != parameter_count()) fail(ErrorKind::DimensionMismatch, "implicit objective: wrong parameter count");
    const std::size_t stride = m_ + 2;
    std::vector<double> s(K_);
    softmax(params.subspan(K_ * stride, K_), s);
    std::vector<DomainLaw> laws;
    laws.reserve(K_);
    for (std::size_t i = 0; i < K_; ++i) {
        DomainLaw law;
        law.form = Form::M4;
        law.c = std::exp(params[i * stride]);
        law.k = {std::exp(params[i * stride + 1])};
        law.t.assign(params.begin() + static_cast<std::ptrdiff_t>(i * stride + 2),
                     params.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
        laws.push_back(std::move(law));
    }
    return MixingLawModel::implicit_sum(std::move(laws), std::move(s), std::move(training_domains));
}

namespace {

// Residuals and Jacobian for the Gauss-Newton stage; same layout as
// ImplicitObjective.
void implicit_residuals(const ImplicitObjective& objective, std::span<const double> params, Eigen::VectorXd& res,
                        Eigen::MatrixXd* J) {
    const std::size_t K = objective.domain_count();
    const std::size_t m = objective.dims();
    const std::size_t stride = m + 2;
    const auto rows = objective.rows();
    const auto targets = objective.targets();
    std::vector<double> s(K);
    softmax(params.subspan(K * stride, K), s);
    const auto n = static_cast<Eigen::Index>(targets.size());
    res.resize(n);
    if (J) J->setZero(n, static_cast<Eigen::Index>(params.size()));
    std::vector<double> c(K), k(K), domain_loss(K), domain_exp(K), slope(K);
    for (std::size_t i = 0; i < K; ++i) {
        c[i] = std::exp(params[i * stride]);
        k[i] = std::exp(params[i * stride + 1]);
    }
    for (Eigen::Index row = 0; row < n; ++row) {
        const double* r = &rows[static_cast<std::size_t>(row) * m];
        double pred = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const double* t = &params[i * stride + 2];
            double z = 0.0;
            for (std::size_t j = 0; j < m; ++j) z += t[j] * r[j];
            const bool clamped = z > kExpClamp || z < -kExpClamp;
            domain_exp[i] = k[i] * clamped_exp(z);
            slope[i] = clamped ? 0.0 : domain_exp[i];
            domain_loss[i] = c[i] + domain_exp[i];
            pred += s[i] * domain_loss[i];
        }
        res[row] = pred - targets[static_cast<std::size_t>(row)];
        if (!J) continue;
        for (std::size_t i = 0; i < K; ++i) {
            const auto col = static_cast<Eigen::Index>(i * stride);
            (*J)(row, col) = s[i] * c[i];
            (*J)(row, col + 1) = s[i] * domain_exp[i];
            for (std::size_t j = 0; j < m; ++j) (*J)(row, col + 2 + static_cast<Eigen::Index>(j)) = s[i] * slope[i] * r[j];
            (*J)(row, static_cast<Eigen::Index>(K * stride + i)) = s[i] * (domain_loss[i] - pred);
        }
    }
}

}  // namespace

FitReport<MixingLawModel> fit_implicit(std::span<const MixtureSample> samples, const FitConfig& config) {
    config.validate();
    if (samples.size() < kMinImplicitRecords) {
        fail(ErrorKind::InsufficientPoints,
             "implicit fit: need at least 8 records, got " + std::to_string(samples.size()));
    }
    for (const auto& s : samples) {
        if (s.mixture.domain_names() != samples.front().mixture.domain_names()) {
            fail(ErrorKind::DimensionMismatch, "implicit fit: samples disagree on training domains");
        }
        if (!(s.loss > 0.0) || !std::isfinite(s.loss)) fail(ErrorKind::InvalidArgument, "implicit fit: losses must be positive");
    }
    const auto K = static_cast<std::size_t>(config.K);
    const ImplicitObjective objective(samples, K, config.huber_delta);
    const std::size_t m = objective.dims();
    const std::size_t stride = m + 2;

    double min_y = std::numeric_limits<double>::infinity();
    double mean_y = 0.0;
    for (const auto& s : samples) {
        min_y = std::min(min_y, s.loss);
        mean_y += s.loss;
    }
    mean_y /= static_cast<double>(samples.size());

    detail::LmOptions lm_options{config.huber_delta, std::min(kRefineIters, config.max_iters), config.tol, {}};
    lm_options.ridge.assign(objective.parameter_count(), 0.0);
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < m; ++j) lm_options.ridge[i * stride + 2 + j] = objective.slope_ridge();
    }
    const detail::ResidualFn residual_fn = [&](std::span<const double> q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        implicit_residuals(objective, q, r, J);
    };

    auto rng = detail::make_rng(config.seed, 0x696d706cULL);
    std::vector<double> best_params;
    double best_value = std::numeric_limits<double>::infinity();
    bool best_converged = false;
    int used = 0;
    const int warmup = std::min(kWarmupIters, config.max_iters);

    for (int start = 0; start < config.restarts; ++start) {
        std::vector<double> params(objective.parameter_count(), 0.0);
        for (std::size_t i = 0; i < K; ++i) {
            double* t = &params[i * stride + 2];
            for (std::size_t j = 0; j < m; ++j) t[j] = kSlopeGrid[rng() % kSlopeGrid.size()];
            const double c0 = min_y * (0.05 + 0.9 * detail::uniform01(rng));
            double shape = 0.0;
            for (const auto& s : samples) {
                double z = 0.0;
                for (std::size_t j = 0; j < m; ++j) z += t[j] * s.mixture[j];
                shape += clamped_exp(z);
            }
            shape /= static_cast<double>(samples.size());
            params[i * stride] = std::log(c0);
            params[i * stride + 1] = std::log((mean_y - c0) / shape);
        }
        ++used;

        // Adam warm start, then Gauss-Newton refinement of the same objective.
        Adam adam;
        std::vector<double> grad(params.size());
        double value = objective.value_and_gradient(params, grad);
        std::vector<double> warm = params;
        double warm_value = value;
        for (int it = 1; it <= warmup && std::isfinite(value); ++it) {
            adam.step(params, grad, it, warmup);
            value = objective.value_and_gradient(params, grad);
            if (value < warm_value) {
                warm_value = value;
                warm = params;
            }
        }
        if (!std::isfinite(warm_value)) continue;

        auto refined = detail::minimize_huber_lm(residual_fn, warm, lm_options);
        if (!usable(refined.params, K, stride) || !(refined.objective <= warm_value)) {
            refined.params = std::move(warm);
            refined.objective = warm_value;
            refined.converged = false;
        }
        if (!usable(refined.params, K, stride)) continue;
        if (refined.objective < best_value) {
            best_value = refined.objective;
            best_params = std::move(refined.params);
            best_converged = refined.converged;
        }
    }
    if (best_params.empty()) fail(ErrorKind::FitFailed, "implicit fit: no restart produced a finite fit");

    FitReport<MixingLawModel> report{objective.to_model(best_params, samples.front().mixture.domain_names()), 0.0,
                                     std::nullopt, 0.0, false, 0};
    report.train_mae = mean_absolute_error(report.model, samples);
    report.objective = best_value;
    report.converged = best_converged;
    report.restarts_used = used;
    return report;
}

FitReport<MixingLawModel> fit_implicit(std::span<const RunRecord> records, const FitConfig& config) {
    const auto samples = samples_for(records, {});
    return fit_implicit(samples, config);
}

}  // namespace mixlaw
