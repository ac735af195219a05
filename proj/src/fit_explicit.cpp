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

constexpr std::array<double, 11> kSlopeGrid{-10.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// exp() with the same clamp as the evaluator, plus its derivative factor.
double exp_with_slope(double z, double& slope) {
    if (z > kExpClamp || z < -kExpClamp) {
        slope = 0.0;
        return clamped_exp(z);
    }
    const double e = std::exp(z);
    slope = e;
    return e;
}

struct Design {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> r;  // n x m
    std::vector<double> y;
    double c_max = 0.0;

    double at(std::size_t i, std::size_t j) const { return r[i * m + j]; }
};

// params: [gamma, kappa (M of them for M1), t_1..t_M]; c = c_max * sigmoid(gamma).
void form_residuals(const Design& d, Form form, std::span<const double> q, Eigen::VectorXd& res,
                    Eigen::MatrixXd* J) {
    const std::size_t m = d.m;
    const std::size_t nk = form == Form::M1 ? m : 1;
    const double sg = sigmoid(q[0]);
    const double c = d.c_max * sg;
    const auto t = q.subspan(1 + nk, m);
    res.resize(static_cast<Eigen::Index>(d.n));
    if (J) J->setZero(static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(1 + nk + m));
    for (std::size_t i = 0; i < d.n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        double pred = c;
        double slope = 0.0;
        switch (form) {
            case Form::M4: {
                double z = 0.0;
                for (std::size_t j = 0; j < m; ++j) z += t[j] * d.at(i, j);
                const double k = std::exp(q[1]);
                const double e = exp_with_slope(z, slope);
                pred += k * e;
                if (J) {
                    (*J)(row, 1) = k * e;
                    for (std::size_t j = 0; j < m; ++j) (*J)(row, static_cast<Eigen::Index>(2 + j)) = k * slope * d.at(i, j);
                }
                break;
            }
            case Form::M2: {
                const double k = std::exp(q[1]);
                double sum = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    const double e = exp_with_slope(t[j] * d.at(i, j), slope);
                    sum += e;
                    if (J) (*J)(row, static_cast<Eigen::Index>(2 + j)) = k * slope * d.at(i, j);
                }
                pred += k * sum;
                if (J) (*J)(row, 1) = k * sum;
                break;
            }
            case Form::M1: {
                for (std::size_t j = 0; j < m; ++j) {
                    const double kj = std::exp(q[1 + j]);
                    const double e = exp_with_slope(t[j] * d.at(i, j), slope);
                    pred += kj * e;
                    if (J) {
                        (*J)(row, static_cast<Eigen::Index>(1 + j)) = kj * e;
                        (*J)(row, static_cast<Eigen::Index>(1 + m + j)) = kj * slope * d.at(i, j);
                    }
                }
                break;
            }
            case Form::M3: {
                double z = 1.0;
                for (std::size_t j = 0; j < m; ++j) z *= t[j] * d.at(i, j);
                const double k = std::exp(q[1]);
                const double e = exp_with_slope(z, slope);
                pred += k * e;
                if (J) {
                    (*J)(row, 1) = k * e;
                    for (std::size_t j = 0; j < m; ++j) {
                        double others = d.at(i, j);
                        for (std::size_t l = 0; l < m; ++l) {
                            if (l != j) others *= t[l] * d.at(i, l);
                        }
                        (*J)(row, static_cast<Eigen::Index>(2 + j)) = k * slope * others;
                    }
                }
                break;
            }
        }
        res[row] = pred - d.y[i];
        if (J) (*J)(row, 0) = d.c_max * sg * (1.0 - sg);
    }
}

// Mean over rows of the per-form shape term that multiplies k.
double mean_shape(const Design& d, Form form, std::span<const double> t, std::size_t only = SIZE_MAX) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
        double v = 0.0;
        switch (form) {
            case Form::M4: {
                double z = 0.0;
                for (std::size_t j = 0; j < d.m; ++j) z += t[j] * d.at(i, j);
                v = clamped_exp(z);
                break;
            }
            case Form::M3: {
                double z = 1.0;
                for (std::size_t j = 0; j < d.m; ++j) z *= t[j] * d.at(i, j);
                v = clamped_exp(z);
                break;
            }
            case Form::M2:
                for (std::size_t j = 0; j < d.m; ++j) v += clamped_exp(t[j] * d.at(i, j));
                break;
            case Form::M1:
                v = clamped_exp(t[only] * d.at(i, only));
                break;
        }
        total += v;
    }
    return total / static_cast<double>(d.n);
}

}  // namespace

FitReport<MixingLawModel> fit_explicit(std::span<const MixtureSample> samples, Form form, const FitConfig& config,
                                       const std::string& target_domain) {
    config.validate();
    if (samples.empty()) fail(ErrorKind::InsufficientPoints, "explicit fit: no samples");
    const std::size_t m = samples.front().mixture.size();
    const std::size_t n_coeff = coefficient_count(form, m);
    if (samples.size() <= n_coeff) {
        fail(ErrorKind::InsufficientPoints, "explicit fit: " + std::string(to_string(form)) + " with M=" +
                                                std::to_string(m) + " has " + std::to_string(n_coeff) +
                                                " coefficients and needs more than that many records, got " +
                                                std::to_string(samples.size()));
    }
    Design d;
    d.n = samples.size();
    d.m = m;
    d.c_max = std::numeric_limits<double>::infinity();
    std::set<std::vector<double>> distinct;
    for (const auto& s : samples) {
        if (s.mixture.domain_names() != samples.front().mixture.domain_names()) {
            fail(ErrorKind::DimensionMismatch, "explicit fit: samples disagree on training domains");
        }
        if (!(s.loss > 0.0) || !std::isfinite(s.loss)) fail(ErrorKind::InvalidArgument, "explicit fit: losses must be positive");
        const auto p = s.mixture.proportions();
        d.r.insert(d.r.end(), p.begin(), p.end());
        d.y.push_back(s.loss);
        d.c_max = std::min(d.c_max, s.loss);
        distinct.emplace(p.begin(), p.end());
    }
    if (distinct.size() < 2) fail(ErrorKind::Degenerate, "explicit fit: all records share one mixture (rank-deficient design)");

    const std::size_t nk = form == Form::M1 ? m : 1;
    double mean_y = 0.0;
    for (double y : d.y) mean_y += y;
    mean_y /= static_cast<double>(d.n);

    const detail::ResidualFn residuals = [&](std::span<const double> q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        form_residuals(d, form, q, r, J);
    };
    detail::LmOptions options{config.huber_delta, config.max_iters, config.tol, {}};
    auto rng = detail::make_rng(config.seed, 0x6578706cULL + static_cast<std::uint64_t>(form));

    detail::LmResult best;
    best.objective = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int start = 0; start < config.restarts; ++start) {
        std::vector<double> t(m);
        for (auto& tj : t) tj = kSlopeGrid[rng() % kSlopeGrid.size()];
        const double draw = detail::uniform01(rng);
        if (start == 0) std::fill(t.begin(), t.end(), 0.0);
        const double frac = start == 0 ? 0.5 : 0.01 + 0.98 * draw;
        const double c0 = d.c_max * frac;

        std::vector<double> q;
        q.push_back(logit(frac));
        if (form == Form::M1) {
            for (std::size_t j = 0; j < m; ++j) {
                q.push_back(std::log((mean_y - c0) / (static_cast<double>(m) * mean_shape(d, form, t, j))));
            }
        } else {
            q.push_back(std::log((mean_y - c0) / mean_shape(d, form, t)));
        }
        q.insert(q.end(), t.begin(), t.end());

        auto result = detail::minimize_huber_lm(residuals, std::move(q), options);
        ++used;
        if (result.objective < best.objective) best = std::move(result);
    }
    if (!std::isfinite(best.objective)) fail(ErrorKind::FitFailed, "explicit fit: no restart produced a finite fit");

    DomainLaw law;
    law.form = form;
    law.c = d.c_max * sigmoid(best.params[0]);
    law.k.clear();
    for (std::size_t j = 0; j < nk; ++j) law.k.push_back(std::exp(best.params[1 + j]));
    law.t.assign(best.params.begin() + static_cast<std::ptrdiff_t>(1 + nk), best.params.end());

    FitReport<MixingLawModel> report{
        MixingLawModel::single(std::move(law), samples.front().mixture.domain_names(), target_domain), 0.0,
        std::nullopt, 0.0, false, 0};
    report.train_mae = mean_absolute_error(report.model, samples);
    report.objective = best.objective;
    report.converged = best.converged;
    report.restarts_used = used;
    return report;
}

FitReport<MixingLawModel> fit_explicit(std::span<const RunRecord> records, const std::string& target_domain,
                                       Form form, const FitConfig& config) {
    if (target_domain.empty()) fail(ErrorKind::InvalidArgument, "explicit fit: target domain name is required");
    const auto samples = samples_for(records, target_domain);
    return fit_explicit(samples, form, config, target_domain);
}

}  // namespace mixlaw
