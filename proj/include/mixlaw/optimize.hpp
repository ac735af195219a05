#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixlaw/core.hpp"
#include "mixlaw/pipeline.hpp"

namespace mixlaw {

struct OptimizeConfig {
    std::optional<double> grid_step;  // default: 0.02 for M <= 5, else 0.05
    int refine_iters = 200;
    // Optional per-domain [lo, hi] proportion bounds.
    std::optional<std::vector<std::pair<double, double>>> bounds;
    std::string tie_break = "lexicographic";  // the only supported rule

    void validate(std::size_t m) const;
    double step_for(std::size_t m) const;
};

struct ArgminResult {
    Mixture mixture = Mixture::from({1.0});
    double loss = 0.0;
    Prediction prediction;           // at `mixture`
    Mixture grid_mixture = Mixture::from({1.0});
    double grid_loss = 0.0;
    std::size_t grid_points = 0;     // feasible points evaluated
    int refine_steps = 0;            // accepted refinement moves
};

/// Minimizes the overall prediction over the (bounded) simplex: a coarse grid
/// pass, then local refinement from the best grid point. Ties go to the
/// lexicographically smallest grid point.
ArgminResult argmin_mixture(const MixingLawModel& model, const OptimizeConfig& config);
ArgminResult argmin_mixture(const EnsembleModel& model, const OptimizeConfig& config);
// Minimizes one chain of a pipeline; empty `chain` picks the overall chain,
// or the only chain when there is just one.
ArgminResult argmin_mixture(const PipelinePrediction& prediction, const OptimizeConfig& config,
                            const std::string& chain = {});

/// Target-domain proportion r at which c + k exp(t r) equals L0.
double critical_proportion(double c, double k, double t, double L0);
double critical_proportion(const ExpDomainLaw& law, double L0);

struct ParetoRow {
    Mixture mixture = Mixture::from({1.0});
    std::vector<double> losses;  // one per law
    bool non_dominated = false;
};

struct ParetoReport {
    std::vector<std::string> domains;
    std::vector<ParetoRow> rows;  // grid order
};

/// Evaluates every law on the grid and flags mixtures no other mixture
/// dominates (at most equal everywhere, strictly lower somewhere).
ParetoReport pareto_report(std::span<const MixingLawModel> laws, std::span<const std::string> domains, double grid_step);

}  // namespace mixlaw
