#include <cmath>
#include <sstream>

#include "mixlaw/fit.hpp"

namespace mixlaw {

void FitConfig::validate() const {
    if (restarts < 1) fail(ErrorKind::InvalidArgument, "fit config: restarts must be >= 1");
    if (max_iters < 1) fail(ErrorKind::InvalidArgument, "fit config: max_iters must be >= 1");
    if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "fit config: tol must be > 0");
    if (!(huber_delta > 0.0)) fail(ErrorKind::InvalidArgument, "fit config: huber_delta must be > 0");
    if (K < 1) fail(ErrorKind::InvalidArgument, "fit config: K must be >= 1");
    if (boost_stages < 1) fail(ErrorKind::InvalidArgument, "fit config: boost_stages must be >= 1");
}

double huber(double residual, double delta) noexcept {
    const double a = std::abs(residual);
    return a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
}

double mean_absolute_error(const MixingLawModel& model, std::span<const MixtureSample> samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) total += std::abs(eval_model(model, s.mixture).overall - s.loss);
    return total / static_cast<double>(samples.size());
}

double mean_absolute_error(const EnsembleModel& model, std::span<const MixtureSample> samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) total += std::abs(eval_model(model, s.mixture).overall - s.loss);
    return total / static_cast<double>(samples.size());
}

std::vector<MixtureSample> samples_for(std::span<const RunRecord> records, const std::string& domain) {
    std::vector<MixtureSample> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (!out.empty() && rec.mixture.domain_names() != out.front().mixture.domain_names()) {
            fail(ErrorKind::DimensionMismatch, "run " + rec.run_id + ": training domains differ from earlier records");
        }
        if (domain.empty()) {
            if (!rec.overall_loss) fail(ErrorKind::MissingDomain, "run " + rec.run_id + " has no overall loss");
            out.push_back({rec.mixture, *rec.overall_loss});
        } else {
            const auto it = rec.domain_losses.find(domain);
            if (it == rec.domain_losses.end()) {
                fail(ErrorKind::MissingDomain, "run " + rec.run_id + " has no loss for domain '" + domain + "'");
            }
            out.push_back({rec.mixture, it->second});
        }
    }
    return out;
}

}  // namespace mixlaw
