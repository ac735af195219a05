#include "mixlaw/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "random.hpp"

namespace mixlaw {

namespace {

constexpr double kFeasibilitySlack = 1e-12;

// Snaps values produced by repeated halving onto a clean binary grid so that
// equal proportions compare equal.
double tidy(double v) { return std::round(v * 0x1p40) / 0x1p40; }

void partial_shuffle(std::vector<std::size_t>& idx, std::size_t take, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < take && i + 1 < idx.size(); ++i) {
        const auto span = static_cast<double>(idx.size() - i);
        const auto j = i + std::min(static_cast<std::size_t>(detail::uniform01(rng) * span), idx.size() - i - 1);
        std::swap(idx[i], idx[j]);
    }
}

}  // namespace

void DesignSpace::validate() const {
    if (r_max.empty()) fail(ErrorKind::InvalidArgument, "design: r_max must list at least one domain");
    for (double r : r_max) {
        if (!(r > 0.0 && r <= 1.0)) fail(ErrorKind::InvalidArgument, "design: each r_max must lie in (0, 1]", "r_max_range");
    }
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::InvalidArgument, "design: delta must lie in (0, 1)", "delta_range");
    if (N < 1) fail(ErrorKind::InvalidArgument, "design: N must be >= 1", "n_positive");
    if (!domain_names.empty() && domain_names.size() != r_max.size()) {
        fail(ErrorKind::DimensionMismatch, "design: domain_names must match r_max", "dimension");
    }
}

std::vector<double> diminishing_values(double r_max, double delta) {
    const double gamma = delta * std::floor(r_max / delta + 1e-9);
    std::set<double, std::greater<>> values{0.0};
    if (gamma > 0.0) {
        const int halvings = static_cast<int>(std::ceil(std::log2(gamma / delta) - 1e-12));
        for (int s = 0; s <= std::max(halvings, 0); ++s) values.insert(tidy(std::max(gamma / std::ldexp(1.0, s), delta)));
    }
    return {values.begin(), values.end()};
}

Candidates enumerate_candidates(const DesignSpace& space) {
    space.validate();
    const std::size_t m = space.r_max.size();
    const auto names = space.domain_names.empty() ? default_domain_names(m) : space.domain_names;

    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i + 1 < m; ++i) values.push_back(diminishing_values(space.r_max[i], space.delta));

    std::set<std::vector<double>> found;
    std::vector<double> point(m, 0.0);
    // Odometer over the first M-1 domains; the last takes the remainder.
    std::vector<std::size_t> pos(values.size(), 0);
    while (true) {
        double used = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            point[i] = values[i][pos[i]];
            used += point[i];
        }
        double rest = tidy(1.0 - used);
        if (rest >= -kFeasibilitySlack && rest <= space.r_max[m - 1] + kFeasibilitySlack) {
            point[m - 1] = std::max(rest, 0.0);
            found.insert(point);
        }
        std::size_t d = 0;
        while (d < pos.size() && ++pos[d] == values[d].size()) pos[d++] = 0;
        if (d == pos.size()) break;
    }
    if (found.empty()) fail(ErrorKind::EmptyCandidates, "design: no feasible candidate mixture for these r_max and delta");

    Candidates out;
    for (const auto& p : found) {
        auto mix = Mixture::from(p, names);
        (mix.has_zero() ? out.zero : out.nonzero).push_back(std::move(mix));
    }
    return out;
}

DesignResult sample_design(const DesignSpace& space, std::uint64_t seed) {
    auto candidates = enumerate_candidates(space);
    const auto n = static_cast<std::size_t>(space.N);
    const std::size_t available = candidates.zero.size() + candidates.nonzero.size();
    if (available < n) {
        std::ostringstream os;
        os << "design: " << n << " mixtures requested but only " << available << " candidates exist (shortfall "
           << n - available << ")";
        fail(ErrorKind::Shortfall, os.str());
    }
    std::size_t want_zero = n / 4;
    std::size_t want_nonzero = n - want_zero;
    if (candidates.zero.size() < want_zero) {
        want_zero = candidates.zero.size();
        want_nonzero = n - want_zero;
    } else if (candidates.nonzero.size() < want_nonzero) {
        want_nonzero = candidates.nonzero.size();
        want_zero = n - want_nonzero;
    }

    auto rng = detail::make_rng(seed, 0x64657369ULL);
    DesignResult result;
    auto draw = [&rng, &result](const std::vector<Mixture>& pool, std::size_t take) {
        std::vector<std::size_t> idx(pool.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        partial_shuffle(idx, take, rng);
        for (std::size_t i = 0; i < take; ++i) result.sampled.push_back(pool[idx[i]]);
    };
    draw(candidates.zero, want_zero);
    draw(candidates.nonzero, want_nonzero);
    result.candidates_zero = std::move(candidates.zero);
    result.candidates_nonzero = std::move(candidates.nonzero);
    return result;
}

std::size_t grid_divisions(double step) {
    if (!(step > 0.0 && step <= 1.0)) fail(ErrorKind::InvalidArgument, "grid step must lie in (0, 1]", "grid_step_range");
    const double inv = 1.0 / step;
    const double rounded = std::round(inv);
    if (std::abs(inv - rounded) > 1e-9 * rounded) {
        fail(ErrorKind::InvalidArgument, "grid step must divide 1 exactly", "grid_step_divides");
    }
    return static_cast<std::size_t>(rounded);
}

std::vector<Mixture> grid_simplex(std::size_t m, double step, std::vector<std::string> names) {
    if (m < 1) fail(ErrorKind::InvalidArgument, "grid: M must be >= 1");
    const std::size_t n = grid_divisions(step);
    if (names.empty()) names = default_domain_names(m);
    std::vector<Mixture> out;
    std::vector<std::size_t> counts(m, 0);
    std::vector<double> point(m);
    // Lexicographic enumeration of compositions of n into m parts.
    auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
        if (i + 1 == m) {
            counts[i] = left;
            for (std::size_t j = 0; j < m; ++j) point[j] = static_cast<double>(counts[j]) / static_cast<double>(n);
            out.push_back(Mixture::from(point, names));
            return;
        }
        for (std::size_t c = 0; c <= left; ++c) {
            counts[i] = c;
            self(self, i + 1, left - c);
        }
    };
    rec(rec, 0, n);
    return out;
}

SubsetSelection select_fitting_subset(std::span<const RunRecord> records, std::size_t subset_size, int n_resamples,
                                      const FitConfig& config, const std::string& target_domain) {
    if (n_resamples < 1) fail(ErrorKind::InvalidArgument, "subset: n_resamples must be >= 1");
    if (subset_size < 1 || subset_size >= records.size()) {
        fail(ErrorKind::InvalidArgument, "subset: subset size must be in [1, number of records)");
    }
    const auto all = samples_for(records, target_domain);
    auto rng = detail::make_rng(config.seed, 0x73756273ULL);

    SubsetSelection best;
    best.mae = std::numeric_limits<double>::infinity();
    for (int draw = 0; draw < n_resamples; ++draw) {
        std::vector<std::size_t> idx(records.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        partial_shuffle(idx, subset_size, rng);
        idx.resize(subset_size);
        std::sort(idx.begin(), idx.end());
        std::vector<MixtureSample> subset;
        for (std::size_t i : idx) subset.push_back(all[i]);

        double mae = 0.0;
        try {
            if (target_domain.empty()) {
                mae = mean_absolute_error(fit_implicit(subset, config).model, all);
            } else {
                mae = mean_absolute_error(fit_explicit(subset, Form::M4, config, target_domain).model, all);
            }
        } catch (const Error&) {
            ++best.failed_resamples;
            continue;
        }
        best.resample_maes.push_back(mae);
        if (mae < best.mae) {
            best.mae = mae;
            best.run_ids.clear();
            for (std::size_t i : idx) best.run_ids.push_back(records[i].run_id);
        }
    }
    if (best.resample_maes.empty()) fail(ErrorKind::FitFailed, "subset: every resample failed to fit");
    return best;
}

}  // namespace mixlaw
