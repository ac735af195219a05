#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixlaw/core.hpp"

namespace mixlaw {

struct FitConfig {
    int restarts = 4;
    int max_iters = 4000;
    double tol = 1e-10;
    double huber_delta = 1e-3;
    std::uint64_t seed = 0;
    int K = 30;
    int boost_stages = 50;

    void validate() const;
};

template <class Model>
struct FitReport {
    Model model;
    double train_mae = 0.0;
    std::optional<double> val_mae;
    double objective = 0.0;
    bool converged = false;
    int restarts_used = 0;
};

struct PowerPoint {
    double x = 1.0;
    double loss = 1.0;
};

/// One (mixture, observed loss) pair used by the mixture-law fitters.
struct MixtureSample {
    Mixture mixture;
    double loss = 0.0;
};

double huber(double residual, double delta) noexcept;

// Mean absolute error of a prediction function over samples.
double mean_absolute_error(const MixingLawModel& model, std::span<const MixtureSample> samples);
double mean_absolute_error(const EnsembleModel& model, std::span<const MixtureSample> samples);

// Extracts (mixture, loss) pairs for a validation domain, or for the overall
// loss when `domain` is empty. Throws MissingDomain when a record lacks it.
std::vector<MixtureSample> samples_for(std::span<const RunRecord> records, const std::string& domain = {});

/// Fits c + k x^alpha by damped Gauss-Newton on a Huber loss of log residuals.
FitReport<PowerLaw> fit_power_law(std::span<const PowerPoint> points, const FitConfig& config);

/// Fits one candidate form to a single validation domain's losses.
FitReport<MixingLawModel> fit_explicit(std::span<const MixtureSample> samples, Form form, const FitConfig& config,
                                       const std::string& target_domain = "target");
FitReport<MixingLawModel> fit_explicit(std::span<const RunRecord> records, const std::string& target_domain,
                                       Form form, const FitConfig& config);

/// Fits K implicit M4 domain laws and softmax weights to overall losses.
FitReport<MixingLawModel> fit_implicit(std::span<const MixtureSample> samples, const FitConfig& config);
FitReport<MixingLawModel> fit_implicit(std::span<const RunRecord> records, const FitConfig& config);

/// AdaBoost.R2 over implicit-aggregation base learners.
FitReport<EnsembleModel> fit_boosted(std::span<const MixtureSample> samples, const FitConfig& config);
FitReport<EnsembleModel> fit_boosted(std::span<const RunRecord> records, const FitConfig& config);

struct FormScore {
    Form form = Form::M4;
    std::optional<double> train_mae;
    std::optional<double> val_mae;
    std::optional<MixingLawModel> model;
    std::string error;
};

struct FormSelection {
    std::vector<FormScore> forms;  // M1..M4 in order
    double baseline_train_mae = 0.0;
    double baseline_val_mae = 0.0;
};

/// Fits M1-M4 on the fitting rows and scores them on both splits, alongside
/// the midpoint-of-range baseline. `fit_ids` and `val_ids` are run ids.
FormSelection select_form(std::span<const RunRecord> records, const std::string& target_domain,
                          std::span<const std::string> fit_ids, std::span<const std::string> val_ids,
                          const FitConfig& config);
FormSelection select_form(std::span<const MixtureSample> fit, std::span<const MixtureSample> val,
                          const FitConfig& config);

// Ridge weight on implicit-domain slopes. Large K is heavily
// over-parameterized; without it noisy fits chase unbounded slopes.
inline constexpr double kImplicitSlopeRidge = 1e-8;

/// Mean-Huber objective of the implicit-aggregation law over a fixed data
/// set, plus `slope_ridge * sum(t^2)`.
///
/// Parameter layout, per implicit domain i: [log c_i, log k_i, t_i1 .. t_iM],
/// followed by K softmax logits for the weights s.
class ImplicitObjective {
public:
    ImplicitObjective(std::span<const MixtureSample> samples, std::size_t K, double huber_delta,
                      double slope_ridge = kImplicitSlopeRidge);

    std::size_t parameter_count() const noexcept { return K_ * (m_ + 2) + K_; }
    std::size_t domain_count() const noexcept { return K_; }
    std::size_t dims() const noexcept { return m_; }

    double value(std::span<const double> params) const;
    double value_and_gradient(std::span<const double> params, std::span<double> gradient) const;

    // Residuals (prediction - target) per sample.
    std::vector<double> residuals(std::span<const double> params) const;

    MixingLawModel to_model(std::span<const double> params, std::vector<std::string> training_domains = {}) const;

    std::span<const double> rows() const noexcept { return rows_; }
    std::span<const double> targets() const noexcept { return targets_; }
    double huber_delta() const noexcept { return delta_; }
    double slope_ridge() const noexcept { return ridge_; }

private:
    std::size_t K_;
    std::size_t m_;
    double delta_;
    double ridge_;
    std::vector<double> rows_;  // n x m, row-major
    std::vector<double> targets_;
};

}  // namespace mixlaw
