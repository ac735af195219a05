#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixlaw/error.hpp"

namespace mixlaw {

inline constexpr double kSimplexTolerance = 1e-9;

// Exponent arguments are clamped to this magnitude before exp().
inline constexpr double kExpClamp = 40.0;

double clamped_exp(double x) noexcept;

// Sum that does not depend on the order of its inputs: the terms are sorted
// before accumulation, so permuting them gives a bit-identical result.
double order_invariant_sum(std::span<const double> terms);

/// A point on the probability simplex over M named training domains.
class Mixture {
public:
    /// Validates and builds a mixture. Empty `names` yields d0, d1, ...
    static Mixture from(std::vector<double> proportions, std::vector<std::string> names = {});

    std::span<const double> proportions() const noexcept { return proportions_; }
    const std::vector<std::string>& domain_names() const noexcept { return names_; }
    std::size_t size() const noexcept { return proportions_.size(); }
    double operator[](std::size_t i) const { return proportions_[i]; }
    bool has_zero() const noexcept;

    friend bool operator==(const Mixture&, const Mixture&) = default;
    friend auto operator<=>(const Mixture& a, const Mixture& b) {
        return a.proportions_ <=> b.proportions_;
    }

private:
    Mixture(std::vector<double> p, std::vector<std::string> n)
        : proportions_(std::move(p)), names_(std::move(n)) {}

    std::vector<double> proportions_;
    std::vector<std::string> names_;
};

std::vector<std::string> default_domain_names(std::size_t m);

/// One observed evaluation of a trained model.
struct RunRecord {
    std::string run_id;
    double model_size = 1.0;
    std::int64_t step = 1;
    std::int64_t batch_tokens = 1;
    Mixture mixture = Mixture::from({1.0});
    std::map<std::string, double> domain_losses;
    std::optional<double> overall_loss;

    // Throws InvalidArgument naming the violated rule.
    void validate() const;
};

/// c + k * exp(sum_j t_j r_j); the multi-domain mixing law for one
/// validation domain.
struct ExpDomainLaw {
    double c = 0.0;
    double k = 1.0;
    std::vector<double> t;

    void validate() const;
};

enum class Form { M1, M2, M3, M4 };

std::string_view to_string(Form form) noexcept;
Form form_from_string(std::string_view name);

// Number of free coefficients of a candidate form for M training domains.
std::size_t coefficient_count(Form form, std::size_t m) noexcept;

/// Coefficients of one candidate law. `k` has M entries for M1 and a single
/// entry otherwise.
struct DomainLaw {
    Form form = Form::M4;
    double c = 0.0;
    std::vector<double> k{1.0};
    std::vector<double> t;

    static DomainLaw from_exp(const ExpDomainLaw& law);
    ExpDomainLaw to_exp() const;

    // Flat layout: M1 -> [c, k_1..k_M, t_1..t_M]; others -> [c, k, t_1..t_M].
    static DomainLaw from_coefficients(Form form, std::span<const double> coefficients);
    std::vector<double> coefficients() const;

    std::size_t dims() const noexcept { return t.size(); }
    void validate() const;
};

enum class Aggregation { Single, Explicit, Implicit };

std::string_view to_string(Aggregation aggregation) noexcept;
Aggregation aggregation_from_string(std::string_view name);

struct Prediction {
    double overall = 0.0;
    std::vector<double> per_domain;
};

/// K domain laws combined with validation weights s.
class MixingLawModel {
public:
    static MixingLawModel single(DomainLaw law, std::vector<std::string> training_domains = {},
                                 std::string validation_domain = "target");
    static MixingLawModel explicit_sum(std::vector<DomainLaw> laws, std::vector<double> weights,
                                       std::vector<std::string> training_domains = {},
                                       std::vector<std::string> validation_domains = {});
    static MixingLawModel implicit_sum(std::vector<DomainLaw> laws, std::vector<double> weights,
                                       std::vector<std::string> training_domains = {});

    Form form() const noexcept { return laws_.front().form; }
    Aggregation aggregation() const noexcept { return aggregation_; }
    const std::vector<DomainLaw>& domain_laws() const noexcept { return laws_; }
    std::span<const double> weights() const noexcept { return weights_; }
    bool weights_learned() const noexcept { return aggregation_ == Aggregation::Implicit; }
    std::size_t dims() const noexcept { return laws_.front().dims(); }
    std::size_t domain_count() const noexcept { return laws_.size(); }
    const std::vector<std::string>& training_domains() const noexcept { return training_domains_; }
    const std::vector<std::string>& validation_domains() const noexcept { return validation_domains_; }

    // Throws InvalidArgument unless every domain law is of form M4.
    void require_m4() const;

private:
    MixingLawModel(Aggregation aggregation, std::vector<DomainLaw> laws, std::vector<double> weights,
                   std::vector<std::string> training_domains,
                   std::vector<std::string> validation_domains);

    Aggregation aggregation_;
    std::vector<DomainLaw> laws_;
    std::vector<double> weights_;
    std::vector<std::string> training_domains_;
    std::vector<std::string> validation_domains_;
};

/// Boosted ensemble; predictions are the weighted median of member overalls.
class EnsembleModel {
public:
    EnsembleModel(std::vector<MixingLawModel> members, std::vector<double> member_weights);

    const std::vector<MixingLawModel>& members() const noexcept { return members_; }
    std::span<const double> member_weights() const noexcept { return weights_; }
    std::size_t dims() const noexcept { return members_.front().dims(); }

private:
    std::vector<MixingLawModel> members_;
    std::vector<double> weights_;
};

/// c + k * x^alpha.
struct PowerLaw {
    double c = 0.0;
    double k = 1.0;
    double alpha = 0.0;

    void validate() const;
};

// --- evaluation -----------------------------------------------------------

double eval_two_domain(double c, double k, double t, double r) noexcept;
double eval_two_domain(const ExpDomainLaw& law, double r);

double eval_m4(const ExpDomainLaw& law, std::span<const double> r);
double eval_m4(const ExpDomainLaw& law, const Mixture& r);

// Raw candidate evaluator; `r` is not required to lie on the simplex.
double eval_candidate(Form form, std::span<const double> coefficients, std::span<const double> r);
double eval_law(const DomainLaw& law, std::span<const double> r);

Prediction eval_model(const MixingLawModel& model, std::span<const double> r);
Prediction eval_model(const MixingLawModel& model, const Mixture& r);
Prediction eval_model(const EnsembleModel& model, std::span<const double> r);
Prediction eval_model(const EnsembleModel& model, const Mixture& r);

// d overall / d r_j for an M4-family model.
std::vector<double> overall_gradient(const MixingLawModel& model, std::span<const double> r);

double eval_power_law(const PowerLaw& law, double x);

// Index of the smallest value whose cumulative weight, in ascending value
// order, exceeds half the total weight. Ties in value keep input order.
std::size_t weighted_median_index(std::span<const double> values, std::span<const double> weights);

// Display helper; storage is always nats per token.
inline double to_perplexity(double loss_nats) noexcept { return std::exp(loss_nats); }

}  // namespace mixlaw
