#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixlaw/core.hpp"
#include "mixlaw/fit.hpp"

namespace mixlaw {

/// Inputs to candidate generation. `r_max[i]` is the largest proportion
/// domain i can take (its available tokens over the target budget).
struct DesignSpace {
    std::vector<double> r_max;
    double delta = 0.125;
    int N = 1;
    std::vector<std::string> domain_names;  // empty: d0, d1, ...

    void validate() const;
};

struct Candidates {
    std::vector<Mixture> zero;     // at least one proportion is 0
    std::vector<Mixture> nonzero;
};

struct DesignResult {
    std::vector<Mixture> candidates_zero;
    std::vector<Mixture> candidates_nonzero;
    std::vector<Mixture> sampled;
};

// Per-domain proportion values for a domain with maximum `r_max`: the
// largest multiple of delta not above r_max, halved repeatedly down to delta,
// plus 0. Returned in decreasing order.
std::vector<double> diminishing_values(double r_max, double delta);

/// All feasible candidates, lexicographically ordered within each set. The
/// last domain takes the remainder and must respect its own r_max.
Candidates enumerate_candidates(const DesignSpace& space);

/// Samples floor(N/4) candidates with a zero proportion and the rest without,
/// backfilling from the other set when one runs short.
DesignResult sample_design(const DesignSpace& space, std::uint64_t seed);

/// Every simplex point whose coordinates are multiples of `step`, in
/// lexicographic order.
std::vector<Mixture> grid_simplex(std::size_t m, double step, std::vector<std::string> names = {});

// Checks that 1/step is an integer and returns it.
std::size_t grid_divisions(double step);

struct SubsetSelection {
    std::vector<std::string> run_ids;  // chosen subset, in record order
    double mae = 0.0;                  // MAE of its fit over all records
    std::vector<double> resample_maes; // one per successful resample
    int failed_resamples = 0;
};

/// Fits the mixing law on `n_resamples` random subsets of `subset_size`
/// records and keeps the subset whose fit has the lowest MAE on all records.
/// With a target domain the fit is an explicit M4 law on that domain;
/// otherwise an implicit fit on overall losses.
SubsetSelection select_fitting_subset(std::span<const RunRecord> records, std::size_t subset_size, int n_resamples,
                                      const FitConfig& config, const std::string& target_domain = {});

}  // namespace mixlaw
