#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixlaw/core.hpp"
#include "mixlaw/fit.hpp"

namespace mixlaw {

struct PipelineConfig {
    std::vector<double> sizes;       // small model sizes, each with a full run per mixture
    std::int64_t S0 = 0;             // last step observed at small scale
    std::int64_t S_target = 0;
    double N_target = 0.0;
    std::int64_t min_fit_step = 2000;  // skips warmup
    FitConfig fit_config;
    bool boosted = false;            // overall chain uses a boosted ensemble

    void validate() const;
};

// Name of the chain fitted to overall losses.
inline constexpr const char* kOverallChain = "overall";

struct StepStage {
    std::size_t mixture = 0;  // index into PipelinePrediction::mixtures
    double size = 0.0;
    FitReport<PowerLaw> fit;
    double extrapolated = 0.0;  // loss at S_target
};

struct SizeStage {
    std::size_t mixture = 0;
    FitReport<PowerLaw> fit;
    double extrapolated = 0.0;  // loss at (N_target, S_target)
};

/// One nested chain: step laws, size laws, then the mixing law over mixtures.
struct PipelineChain {
    std::string name;  // validation domain, or kOverallChain
    std::vector<StepStage> step_laws;
    std::vector<SizeStage> size_laws;
    std::optional<FitReport<MixingLawModel>> mixing;
    std::optional<FitReport<EnsembleModel>> boosted_mixing;

    Prediction evaluate(std::span<const double> r) const;
    double mixing_train_mae() const;
};

struct PipelineOutput {
    std::optional<double> overall;
    std::map<std::string, double> per_domain;
};

struct PipelinePrediction {
    std::vector<std::string> training_domains;
    std::vector<Mixture> mixtures;        // fitting mixtures, first-seen order
    std::vector<PipelineChain> chains;    // domain chains (sorted by name), then overall
    std::vector<Mixture> targets;
    std::vector<PipelineOutput> predicted;  // one per target
    std::vector<std::string> warnings;

    const PipelineChain* chain(const std::string& name) const;
    std::size_t dims() const noexcept { return training_domains.size(); }
};

/// Nested prediction: step law per run curve, size law per mixture at
/// S_target, mixing law across mixtures at (N_target, S_target).
PipelinePrediction run_pipeline(std::span<const RunRecord> records, std::span<const Mixture> targets,
                                const PipelineConfig& config);

PipelineOutput predict(const PipelinePrediction& prediction, const Mixture& r);
PipelineOutput predict(const PipelinePrediction& prediction, std::span<const double> r);

}  // namespace mixlaw
