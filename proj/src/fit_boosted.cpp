#include <algorithm>
#include <cmath>
#include <limits>

#include "mixlaw/fit.hpp"
#include "random.hpp"

namespace mixlaw {

namespace {

// Stage 0 uses the caller's seed, so the first member is exactly the
// unboosted fit.
std::uint64_t stage_seed(std::uint64_t seed, int stage) {
    return stage == 0 ? seed : seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stage));
}

// Draws n indices with replacement, proportional to `weights` (which sum to 1).
std::vector<std::size_t> resample(std::span<const double> weights, std::mt19937_64& rng) {
    std::vector<double> cumulative(weights.size());
    double running = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        running += weights[i];
        cumulative[i] = running;
    }
    std::vector<std::size_t> picks(weights.size());
    for (auto& p : picks) {
        const double u = detail::uniform01(rng) * running;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        p = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), weights.size() - 1);
    }
    return picks;
}

}  // namespace

// AdaBoost.R2 with linear loss. The first stage trains on the data as given
// (uniform weights); later stages train on weighted resamples.
FitReport<EnsembleModel> fit_boosted(std::span<const MixtureSample> samples, const FitConfig& config) {
    config.validate();
    const std::size_t n = samples.size();
    std::vector<double> weights(n, n ? 1.0 / static_cast<double>(n) : 0.0);
    auto rng = detail::make_rng(config.seed, 0x626f6f73ULL);

    std::vector<MixingLawModel> members;
    std::vector<double> member_weights;
    int restarts = 0;
    bool all_converged = true;

    for (int stage = 0; stage < config.boost_stages; ++stage) {
        FitConfig base = config;
        base.seed = stage_seed(config.seed, stage);
        std::vector<MixtureSample> train;
        if (stage == 0) {
            train.assign(samples.begin(), samples.end());
        } else {
            for (std::size_t i : resample(weights, rng)) train.push_back(samples[i]);
        }
        auto fit = fit_implicit(train, base);
        restarts += fit.restarts_used;

        std::vector<double> err(n);
        double max_err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = std::abs(eval_model(fit.model, samples[i].mixture).overall - samples[i].loss);
            max_err = std::max(max_err, err[i]);
        }
        double avg = 0.0;
        if (max_err > 0.0) {
            for (std::size_t i = 0; i < n; ++i) avg += weights[i] * err[i] / max_err;
        }

        if (avg <= 0.0) {
            // A perfect learner: keep it and stop.
            all_converged = all_converged && fit.converged;
            members.push_back(std::move(fit.model));
            member_weights.push_back(1.0);
            break;
        }
        if (avg >= 0.5) {
            if (members.empty()) {
                all_converged = all_converged && fit.converged;
                members.push_back(std::move(fit.model));
                member_weights.push_back(1.0);
            }
            break;
        }
        const double beta = avg / (1.0 - avg);
        all_converged = all_converged && fit.converged;
        members.push_back(std::move(fit.model));
        member_weights.push_back(std::log(1.0 / beta));

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] *= std::pow(beta, 1.0 - err[i] / max_err);
            total += weights[i];
        }
        for (auto& w : weights) w /= total;
    }

    FitReport<EnsembleModel> report{EnsembleModel(std::move(members), std::move(member_weights)), 0.0, std::nullopt,
                                    0.0, all_converged, restarts};
    double objective = 0.0;
    for (const auto& s : samples) objective += huber(eval_model(report.model, s.mixture).overall - s.loss, config.huber_delta);
    report.objective = objective / static_cast<double>(n);
    report.train_mae = mean_absolute_error(report.model, samples);
    return report;
}

FitReport<EnsembleModel> fit_boosted(std::span<const RunRecord> records, const FitConfig& config) {
    const auto samples = samples_for(records, {});
    return fit_boosted(samples, config);
}

}  // namespace mixlaw
