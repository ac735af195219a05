#include "mixlaw/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace mixlaw {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::InsufficientPoints: return "insufficient_points";
        case ErrorKind::Degenerate: return "degenerate";
        case ErrorKind::MissingDomain: return "missing_domain";
        case ErrorKind::NoSolution: return "no_solution";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::EmptyCandidates: return "empty_candidates";
        case ErrorKind::Shortfall: return "shortfall";
        case ErrorKind::Coverage: return "coverage";
        case ErrorKind::FitFailed: return "fit_failed";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

double clamped_exp(double x) noexcept { return std::exp(std::clamp(x, -kExpClamp, kExpClamp)); }

double order_invariant_sum(std::span<const double> terms) {
    if (terms.size() <= 1) return terms.empty() ? 0.0 : terms[0];
    double buffer[16];
    std::vector<double> heap;
    double* sorted = buffer;
    if (terms.size() > std::size(buffer)) {
        heap.assign(terms.begin(), terms.end());
        sorted = heap.data();
    } else {
        std::copy(terms.begin(), terms.end(), buffer);
    }
    std::sort(sorted, sorted + terms.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) sum += sorted[i];
    return sum;
}

namespace {

// sum_j t_j r_j, independent of domain order.
double linear_exponent(std::span<const double> t, std::span<const double> r) {
    double buffer[16];
    std::vector<double> heap;
    double* products = buffer;
    if (t.size() > std::size(buffer)) {
        heap.resize(t.size());
        products = heap.data();
    }
    for (std::size_t j = 0; j < t.size(); ++j) products[j] = t[j] * r[j];
    return order_invariant_sum({products, t.size()});
}

void check_dims(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        std::ostringstream os;
        os << what << ": expected " << expected << " proportions, got " << got;
        fail(ErrorKind::DimensionMismatch, os.str(), "dimension");
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// --- Mixture -----------------------------------------------------------------

std::vector<std::string> default_domain_names(std::size_t m) {
    std::vector<std::string> names;
    names.reserve(m);
    for (std::size_t i = 0; i < m; ++i) names.push_back("d" + std::to_string(i));
    return names;
}

Mixture Mixture::from(std::vector<double> proportions, std::vector<std::string> names) {
    if (proportions.empty()) fail(ErrorKind::InvalidArgument, "mixture: at least one domain is required", "dimension");
    if (names.empty()) names = default_domain_names(proportions.size());
    if (names.size() != proportions.size()) {
        check_dims(names.size(), proportions.size(), "mixture");
    }
    if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
        fail(ErrorKind::InvalidArgument, "mixture: domain names must be unique", "unique_names");
    }
    for (std::size_t i = 0; i < proportions.size(); ++i) {
        const double p = proportions[i];
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            std::ostringstream os;
            os << "mixture: proportion_range violated by " << names[i] << " = " << p;
            fail(ErrorKind::InvalidArgument, os.str(), "proportion_range");
        }
    }
    const double sum = std::accumulate(proportions.begin(), proportions.end(), 0.0);
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "mixture: simplex_sum violated, proportions sum to " << sum;
        fail(ErrorKind::InvalidArgument, os.str(), "simplex_sum");
    }
    return Mixture(std::move(proportions), std::move(names));
}

bool Mixture::has_zero() const noexcept {
    return std::any_of(proportions_.begin(), proportions_.end(), [](double p) { return p == 0.0; });
}

// --- RunRecord -----------------------------------------------------------------

void RunRecord::validate() const {
    auto reject = [&](const std::string& rule, const std::string& detail) {
        fail(ErrorKind::InvalidArgument, "run " + run_id + " step " + std::to_string(step) + ": " + rule + " violated" + detail,
             rule);
    };
    if (step < 1) reject("step_positive", " (step >= 1)");
    if (!(model_size >= 1.0) || !std::isfinite(model_size)) reject("model_size_positive", " (model_size >= 1)");
    if (batch_tokens < 1) reject("batch_tokens_positive", "");
    for (const auto& [name, loss] : domain_losses) {
        if (!(loss > 0.0) || !std::isfinite(loss)) reject("loss_positive", " for domain " + name);
    }
    if (overall_loss && (!(*overall_loss > 0.0) || !std::isfinite(*overall_loss))) {
        reject("loss_positive", " for overall loss");
    }
}

// --- laws ----------------------------------------------------------------------

void ExpDomainLaw::validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) fail(ErrorKind::InvalidArgument, "exp law: k must be positive and finite");
    if (!(c >= 0.0) || !std::isfinite(c)) fail(ErrorKind::InvalidArgument, "exp law: c must be nonnegative and finite");
    if (t.empty()) fail(ErrorKind::InvalidArgument, "exp law: t must have at least one entry");
    if (!all_finite(t)) fail(ErrorKind::InvalidArgument, "exp law: t must be finite");
}

std::string_view to_string(Form form) noexcept {
    switch (form) {
        case Form::M1: return "M1";
        case Form::M2: return "M2";
        case Form::M3: return "M3";
        case Form::M4: return "M4";
    }
    return "M4";
}

Form form_from_string(std::string_view name) {
    if (name == "M1" || name == "m1") return Form::M1;
    if (name == "M2" || name == "m2") return Form::M2;
    if (name == "M3" || name == "m3") return Form::M3;
    if (name == "M4" || name == "m4") return Form::M4;
    fail(ErrorKind::InvalidArgument, "unknown law form '" + std::string(name) + "'");
}

std::size_t coefficient_count(Form form, std::size_t m) noexcept {
    return form == Form::M1 ? 2 * m + 1 : m + 2;
}

DomainLaw DomainLaw::from_exp(const ExpDomainLaw& law) {
    return DomainLaw{Form::M4, law.c, {law.k}, law.t};
}

ExpDomainLaw DomainLaw::to_exp() const {
    if (form != Form::M4) fail(ErrorKind::InvalidArgument, "domain law is not of form M4");
    return ExpDomainLaw{c, k.front(), t};
}

DomainLaw DomainLaw::from_coefficients(Form form, std::span<const double> coefficients) {
    const std::size_t n = coefficients.size();
    std::size_t m = 0;
    if (form == Form::M1) {
        if (n < 3 || (n - 1) % 2 != 0) fail(ErrorKind::DimensionMismatch, "M1 expects 2M+1 coefficients");
        m = (n - 1) / 2;
    } else {
        if (n < 3) fail(ErrorKind::DimensionMismatch, std::string(to_string(form)) + " expects M+2 coefficients");
        m = n - 2;
    }
    DomainLaw law;
    law.form = form;
    law.c = coefficients[0];
    const std::size_t nk = form == Form::M1 ? m : 1;
    law.k.assign(coefficients.begin() + 1, coefficients.begin() + 1 + static_cast<std::ptrdiff_t>(nk));
    law.t.assign(coefficients.begin() + 1 + static_cast<std::ptrdiff_t>(nk), coefficients.end());
    return law;
}

std::vector<double> DomainLaw::coefficients() const {
    std::vector<double> out;
    out.reserve(1 + k.size() + t.size());
    out.push_back(c);
    out.insert(out.end(), k.begin(), k.end());
    out.insert(out.end(), t.begin(), t.end());
    return out;
}

void DomainLaw::validate() const {
    if (t.empty()) fail(ErrorKind::InvalidArgument, "domain law: t must have at least one entry");
    const std::size_t expected_k = form == Form::M1 ? t.size() : 1;
    if (k.size() != expected_k) fail(ErrorKind::DimensionMismatch, "domain law: wrong number of k coefficients");
    if (!std::isfinite(c) || c < 0.0) fail(ErrorKind::InvalidArgument, "domain law: c must be nonnegative and finite");
    for (double kj : k) {
        if (!(kj > 0.0) || !std::isfinite(kj)) fail(ErrorKind::InvalidArgument, "domain law: k must be positive and finite");
    }
    if (!all_finite(t)) fail(ErrorKind::InvalidArgument, "domain law: t must be finite");
}

std::string_view to_string(Aggregation aggregation) noexcept {
    switch (aggregation) {
        case Aggregation::Single: return "single";
        case Aggregation::Explicit: return "explicit";
        case Aggregation::Implicit: return "implicit";
    }
    return "single";
}

Aggregation aggregation_from_string(std::string_view name) {
    if (name == "single") return Aggregation::Single;
    if (name == "explicit") return Aggregation::Explicit;
    if (name == "implicit") return Aggregation::Implicit;
    fail(ErrorKind::InvalidArgument, "unknown aggregation '" + std::string(name) + "'");
}

// --- MixingLawModel -------------------------------------------------------------

MixingLawModel::MixingLawModel(Aggregation aggregation, std::vector<DomainLaw> laws, std::vector<double> weights,
                               std::vector<std::string> training_domains,
                               std::vector<std::string> validation_domains)
    : aggregation_(aggregation),
      laws_(std::move(laws)),
      weights_(std::move(weights)),
      training_domains_(std::move(training_domains)),
      validation_domains_(std::move(validation_domains)) {
    if (laws_.empty()) fail(ErrorKind::InvalidArgument, "mixing law model: K must be at least 1");
    if (weights_.size() != laws_.size()) {
        fail(ErrorKind::DimensionMismatch, "mixing law model: weight count must equal domain-law count");
    }
    const std::size_t m = laws_.front().dims();
    for (const auto& law : laws_) {
        law.validate();
        if (law.dims() != m) fail(ErrorKind::DimensionMismatch, "mixing law model: domain laws disagree on M");
        if (law.form != laws_.front().form) fail(ErrorKind::InvalidArgument, "mixing law model: mixed forms");
    }
    for (double s : weights_) {
        if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorKind::InvalidArgument, "mixing law model: weights must be >= 0");
    }
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > kSimplexTolerance) {
        fail(ErrorKind::InvalidArgument, "mixing law model: weights must sum to 1");
    }
    if (training_domains_.empty()) training_domains_ = default_domain_names(m);
    check_dims(m, training_domains_.size(), "mixing law model training domains");
    if (validation_domains_.empty()) {
        for (std::size_t i = 0; i < laws_.size(); ++i) {
            validation_domains_.push_back((aggregation_ == Aggregation::Implicit ? "implicit" : "v") +
                                          std::to_string(i));
        }
    }
    if (validation_domains_.size() != laws_.size()) {
        fail(ErrorKind::DimensionMismatch, "mixing law model: validation domain names must match K");
    }
}

MixingLawModel MixingLawModel::single(DomainLaw law, std::vector<std::string> training_domains,
                                      std::string validation_domain) {
    std::vector<DomainLaw> laws{std::move(law)};
    return MixingLawModel(Aggregation::Single, std::move(laws), {1.0}, std::move(training_domains),
                          {std::move(validation_domain)});
}

MixingLawModel MixingLawModel::explicit_sum(std::vector<DomainLaw> laws, std::vector<double> weights,
                                            std::vector<std::string> training_domains,
                                            std::vector<std::string> validation_domains) {
    return MixingLawModel(Aggregation::Explicit, std::move(laws), std::move(weights), std::move(training_domains),
                          std::move(validation_domains));
}

MixingLawModel MixingLawModel::implicit_sum(std::vector<DomainLaw> laws, std::vector<double> weights,
                                            std::vector<std::string> training_domains) {
    return MixingLawModel(Aggregation::Implicit, std::move(laws), std::move(weights), std::move(training_domains),
                          {});
}

void MixingLawModel::require_m4() const {
    if (form() != Form::M4) {
        fail(ErrorKind::InvalidArgument,
             "only M4-family models are accepted here, got " + std::string(to_string(form())));
    }
}

EnsembleModel::EnsembleModel(std::vector<MixingLawModel> members, std::vector<double> member_weights)
    : members_(std::move(members)), weights_(std::move(member_weights)) {
    if (members_.empty()) fail(ErrorKind::InvalidArgument, "ensemble: at least one member is required");
    if (weights_.size() != members_.size()) fail(ErrorKind::DimensionMismatch, "ensemble: one weight per member");
    for (double w : weights_) {
        if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorKind::InvalidArgument, "ensemble: member weights must be > 0");
    }
    for (const auto& m : members_) {
        if (m.dims() != members_.front().dims()) fail(ErrorKind::DimensionMismatch, "ensemble: members disagree on M");
    }
}

void PowerLaw::validate() const {
    if (!std::isfinite(c) || c < 0.0) fail(ErrorKind::InvalidArgument, "power law: c must be nonnegative");
    if (!(k > 0.0) || !std::isfinite(k)) fail(ErrorKind::InvalidArgument, "power law: k must be positive");
    if (!std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "power law: alpha must be finite");
}

// --- evaluation ------------------------------------------------------------------

double eval_two_domain(double c, double k, double t, double r) noexcept { return c + k * clamped_exp(t * r); }

double eval_two_domain(const ExpDomainLaw& law, double r) {
    if (law.t.size() != 1) fail(ErrorKind::DimensionMismatch, "two-domain law takes exactly one slope");
    return eval_two_domain(law.c, law.k, law.t[0], r);
}

double eval_m4(const ExpDomainLaw& law, std::span<const double> r) {
    check_dims(law.t.size(), r.size(), "eval_m4");
    return law.c + law.k * clamped_exp(linear_exponent(law.t, r));
}

double eval_m4(const ExpDomainLaw& law, const Mixture& r) { return eval_m4(law, r.proportions()); }

double eval_candidate(Form form, std::span<const double> coefficients, std::span<const double> r) {
    const std::size_t m = r.size();
    if (coefficients.size() != coefficient_count(form, m)) {
        std::ostringstream os;
        os << to_string(form) << " with M=" << m << " expects " << coefficient_count(form, m)
           << " coefficients, got " << coefficients.size();
        fail(ErrorKind::DimensionMismatch, os.str());
    }
    const double c = coefficients[0];
    switch (form) {
        case Form::M1: {
            const auto k = coefficients.subspan(1, m);
            const auto t = coefficients.subspan(1 + m, m);
            std::vector<double> terms(m);
            for (std::size_t j = 0; j < m; ++j) terms[j] = k[j] * clamped_exp(t[j] * r[j]);
            return c + order_invariant_sum(terms);
        }
        case Form::M2: {
            const auto t = coefficients.subspan(2, m);
            std::vector<double> terms(m);
            for (std::size_t j = 0; j < m; ++j) terms[j] = clamped_exp(t[j] * r[j]);
            return c + coefficients[1] * order_invariant_sum(terms);
        }
        case Form::M3: {
            const auto t = coefficients.subspan(2, m);
            std::vector<double> factors(m);
            for (std::size_t j = 0; j < m; ++j) factors[j] = t[j] * r[j];
            std::sort(factors.begin(), factors.end());
            double product = 1.0;
            for (double f : factors) product *= f;
            return c + coefficients[1] * clamped_exp(product);
        }
        case Form::M4:
            return c + coefficients[1] * clamped_exp(linear_exponent(coefficients.subspan(2, m), r));
    }
    return c;
}

double eval_law(const DomainLaw& law, std::span<const double> r) {
    check_dims(law.t.size(), r.size(), "eval_law");
    if (law.form == Form::M4) return law.c + law.k[0] * clamped_exp(linear_exponent(law.t, r));
    const auto coefficients = law.coefficients();
    return eval_candidate(law.form, coefficients, r);
}

Prediction eval_model(const MixingLawModel& model, std::span<const double> r) {
    check_dims(model.dims(), r.size(), "eval_model");
    Prediction out;
    out.per_domain.reserve(model.domain_count());
    const auto s = model.weights();
    double overall = 0.0;
    for (std::size_t i = 0; i < model.domain_count(); ++i) {
        const double loss = eval_law(model.domain_laws()[i], r);
        out.per_domain.push_back(loss);
        overall += s[i] * loss;
    }
    out.overall = overall;
    return out;
}

Prediction eval_model(const MixingLawModel& model, const Mixture& r) { return eval_model(model, r.proportions()); }

Prediction eval_model(const EnsembleModel& model, std::span<const double> r) {
    check_dims(model.dims(), r.size(), "eval_model");
    std::vector<Prediction> predictions;
    std::vector<double> overall;
    predictions.reserve(model.members().size());
    for (const auto& member : model.members()) {
        predictions.push_back(eval_model(member, r));
        overall.push_back(predictions.back().overall);
    }
    return predictions[weighted_median_index(overall, model.member_weights())];
}

Prediction eval_model(const EnsembleModel& model, const Mixture& r) { return eval_model(model, r.proportions()); }

std::vector<double> overall_gradient(const MixingLawModel& model, std::span<const double> r) {
    model.require_m4();
    check_dims(model.dims(), r.size(), "overall_gradient");
    std::vector<double> grad(r.size(), 0.0);
    const auto s = model.weights();
    for (std::size_t i = 0; i < model.domain_count(); ++i) {
        const auto& law = model.domain_laws()[i];
        const double z = linear_exponent(law.t, r);
        if (std::abs(z) > kExpClamp) continue;  // clamped region is flat
        const double scale = s[i] * law.k[0] * std::exp(z);
        for (std::size_t j = 0; j < r.size(); ++j) grad[j] += scale * law.t[j];
    }
    return grad;
}

double eval_power_law(const PowerLaw& law, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        std::ostringstream os;
        os << "power law: x must be positive, got " << x;
        fail(ErrorKind::InvalidArgument, os.str());
    }
    return law.c + law.k * std::pow(x, law.alpha);
}

std::size_t weighted_median_index(std::span<const double> values, std::span<const double> weights) {
    if (values.empty() || values.size() != weights.size()) {
        fail(ErrorKind::DimensionMismatch, "weighted median: values and weights must be nonempty and aligned");
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double half = 0.5 * std::accumulate(weights.begin(), weights.end(), 0.0);
    double cumulative = 0.0;
    for (std::size_t idx : order) {
        cumulative += weights[idx];
        if (cumulative > half) return idx;
    }
    return order.back();
}

}  // namespace mixlaw
