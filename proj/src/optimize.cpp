#include "mixlaw/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "mixlaw/design.hpp"

namespace mixlaw {

namespace {

constexpr double kBoundSlack = 1e-12;

struct Objective {
    std::size_t m = 0;
    std::vector<std::string> names;
    std::function<double(std::span<const double>)> value;
    std::function<std::vector<double>(std::span<const double>)> gradient;  // empty: derivative-free
    std::function<Prediction(std::span<const double>)> full;
};

bool significantly_lower(double candidate, double incumbent) {
    return candidate < incumbent - 1e-14 * std::max(1.0, std::abs(incumbent));
}

struct Box {
    std::vector<double> lo, hi;

    bool contains(std::span<const double> r) const {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (r[j] < lo[j] - kBoundSlack || r[j] > hi[j] + kBoundSlack) return false;
        }
        return true;
    }
};

Box box_for(const OptimizeConfig& config, std::size_t m) {
    Box box{std::vector<double>(m, 0.0), std::vector<double>(m, 1.0)};
    if (config.bounds) {
        for (std::size_t j = 0; j < m; ++j) {
            box.lo[j] = (*config.bounds)[j].first;
            box.hi[j] = (*config.bounds)[j].second;
        }
    }
    return box;
}

// Visits every feasible grid point in lexicographic order.
std::size_t for_each_grid_point(std::size_t m, std::size_t n, const Box& box,
                                const std::function<void(std::span<const double>)>& visit) {
    std::vector<double> point(m);
    std::size_t visited = 0;
    auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
        if (i + 1 == m) {
            point[i] = static_cast<double>(left) / static_cast<double>(n);
            if (point[i] < box.lo[i] - kBoundSlack || point[i] > box.hi[i] + kBoundSlack) return;
            ++visited;
            visit(point);
            return;
        }
        for (std::size_t c = 0; c <= left; ++c) {
            point[i] = static_cast<double>(c) / static_cast<double>(n);
            if (point[i] < box.lo[i] - kBoundSlack) continue;
            if (point[i] > box.hi[i] + kBoundSlack) break;
            self(self, i + 1, left - c);
        }
    };
    rec(rec, 0, n);
    return visited;
}

// Gradient descent in softmax coordinates over the grid point's support.
int refine_gradient(const Objective& f, const Box& box, std::vector<double>& r, double& value, int iters) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < r.size(); ++j) {
        if (r[j] > 0.0) active.push_back(j);
    }
    if (active.size() < 2) return 0;
    std::vector<double> z(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) z[a] = std::log(r[active[a]]);

    const auto to_mixture = [&](std::span<const double> zz) {
        std::vector<double> out(r.size(), 0.0);
        const double top = *std::max_element(zz.begin(), zz.end());
        double total = 0.0;
        for (std::size_t a = 0; a < zz.size(); ++a) total += out[active[a]] = std::exp(zz[a] - top);
        for (std::size_t a = 0; a < zz.size(); ++a) out[active[a]] /= total;
        return out;
    };

    int accepted = 0;
    double eta = 1.0;
    for (int it = 0; it < iters; ++it) {
        const auto g_r = f.gradient(r);
        double mean = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a) mean += r[active[a]] * g_r[active[a]];
        std::vector<double> g_z(active.size());
        double norm = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            g_z[a] = r[active[a]] * (g_r[active[a]] - mean);
            norm = std::max(norm, std::abs(g_z[a]));
        }
        if (!(norm > 0.0)) break;

        bool moved = false;
        while (eta * norm > 1e-14) {
            std::vector<double> zn(z);
            for (std::size_t a = 0; a < z.size(); ++a) zn[a] -= eta * g_z[a];
            auto rn = to_mixture(zn);
            if (box.contains(rn)) {
                const double vn = f.value(rn);
                if (significantly_lower(vn, value)) {
                    z = std::move(zn);
                    r = std::move(rn);
                    value = vn;
                    eta *= 2.0;
                    moved = true;
                    ++accepted;
                    break;
                }
            }
            eta *= 0.5;
        }
        if (!moved) break;
    }
    return accepted;
}

// Golden-section line searches along each domain's axis, moving mass
// between that domain and the rest proportionally.
int refine_coordinates(const Objective& f, const Box& box, std::vector<double>& r, double& value, int sweeps,
                       double width) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    int accepted = 0;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        bool improved = false;
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double rest = 1.0 - r[j];
            if (rest < 1e-15) continue;
            const auto along = [&](double theta) {
                std::vector<double> out(r.size());
                for (std::size_t i = 0; i < r.size(); ++i) out[i] = i == j ? theta : (1.0 - theta) * r[i] / rest;
                return out;
            };
            double lo = std::max({0.0, box.lo[j], r[j] - width});
            double hi = std::min({1.0, box.hi[j], r[j] + width});
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i == j || r[i] <= 0.0) continue;
                const double w = r[i] / rest;
                lo = std::max(lo, 1.0 - box.hi[i] / w);
                hi = std::min(hi, 1.0 - box.lo[i] / w);
            }
            if (!(hi > lo)) continue;
            const auto eval = [&](double theta) {
                const auto p = along(theta);
                return box.contains(p) ? f.value(p) : std::numeric_limits<double>::infinity();
            };
            double a = lo, b = hi;
            double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
            double f1 = eval(x1), f2 = eval(x2);
            for (int k = 0; k < 60 && b - a > 1e-12; ++k) {
                if (f1 <= f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - inv_phi * (b - a);
                    f1 = eval(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + inv_phi * (b - a);
                    f2 = eval(x2);
                }
            }
            const double theta = f1 <= f2 ? x1 : x2;
            const double v = std::min(f1, f2);
            if (significantly_lower(v, value)) {
                r = along(theta);
                value = v;
                improved = true;
                ++accepted;
            }
        }
        if (!improved) break;
    }
    return accepted;
}

ArgminResult minimize(const Objective& f, const OptimizeConfig& config) {
    config.validate(f.m);
    const Box box = box_for(config, f.m);
    const double step = config.step_for(f.m);
    const std::size_t n = grid_divisions(step);

    std::vector<double> best;
    double best_value = std::numeric_limits<double>::infinity();
    const std::size_t visited = for_each_grid_point(f.m, n, box, [&](std::span<const double> p) {
        const double v = f.value(p);
        // Lexicographic order of the visit makes the first of tied points win.
        if (best.empty() || significantly_lower(v, best_value)) {
            best.assign(p.begin(), p.end());
            best_value = v;
        }
    });
    if (best.empty()) {
        fail(ErrorKind::Infeasible, "optimize: no grid point satisfies the bounds at step " + std::to_string(step) +
                                        "; use a finer grid_step");
    }

    ArgminResult result;
    result.grid_mixture = Mixture::from(best, f.names);
    result.grid_loss = best_value;
    result.grid_points = visited;

    std::vector<double> r = best;
    double value = best_value;
    if (f.gradient) {
        result.refine_steps = refine_gradient(f, box, r, value, config.refine_iters);
    } else {
        result.refine_steps = refine_coordinates(f, box, r, value, config.refine_iters, step);
    }
    // Renormalize away rounding so the result passes simplex validation.
    const double total = std::accumulate(r.begin(), r.end(), 0.0);
    for (auto& x : r) x /= total;
    if (!box.contains(r) || !(f.value(r) <= best_value)) {
        r = best;
        value = best_value;
    }
    result.mixture = Mixture::from(r, f.names);
    result.loss = f.value(r);
    result.prediction = f.full(r);
    return result;
}

}  // namespace

void OptimizeConfig::validate(std::size_t m) const {
    if (grid_step && !(*grid_step > 0.0 && *grid_step < 1.0)) {
        fail(ErrorKind::InvalidArgument, "optimize: grid_step must lie in (0, 1)", "grid_step_range");
    }
    if (refine_iters < 0) fail(ErrorKind::InvalidArgument, "optimize: refine_iters must be >= 0");
    if (tie_break != "lexicographic") {
        fail(ErrorKind::InvalidArgument, "optimize: unknown tie_break rule '" + tie_break + "'");
    }
    if (!bounds) return;
    if (bounds->size() != m) {
        fail(ErrorKind::DimensionMismatch,
             "optimize: expected " + std::to_string(m) + " bounds, got " + std::to_string(bounds->size()), "dimension");
    }
    double lo_sum = 0.0, hi_sum = 0.0;
    for (const auto& [lo, hi] : *bounds) {
        if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
            fail(ErrorKind::Infeasible, "optimize: each bound needs 0 <= lo <= hi <= 1", "bounds_range");
        }
        lo_sum += lo;
        hi_sum += hi;
    }
    if (lo_sum > 1.0 + kBoundSlack || hi_sum < 1.0 - kBoundSlack) {
        std::ostringstream os;
        os << "optimize: bounds leave no simplex point (sum of lower bounds " << lo_sum << ", sum of upper bounds "
           << hi_sum << ")";
        fail(ErrorKind::Infeasible, os.str(), "bounds_feasible");
    }
}

double OptimizeConfig::step_for(std::size_t m) const {
    if (grid_step) return *grid_step;
    return m <= 5 ? 0.02 : 0.05;
}

ArgminResult argmin_mixture(const MixingLawModel& model, const OptimizeConfig& config) {
    model.require_m4();
    Objective f;
    f.m = model.dims();
    f.names = model.training_domains();
    f.value = [&model](std::span<const double> r) { return eval_model(model, r).overall; };
    f.gradient = [&model](std::span<const double> r) { return overall_gradient(model, r); };
    f.full = [&model](std::span<const double> r) { return eval_model(model, r); };
    return minimize(f, config);
}

ArgminResult argmin_mixture(const EnsembleModel& model, const OptimizeConfig& config) {
    for (const auto& member : model.members()) member.require_m4();
    Objective f;
    f.m = model.dims();
    f.names = model.members().front().training_domains();
    f.value = [&model](std::span<const double> r) { return eval_model(model, r).overall; };
    f.full = [&model](std::span<const double> r) { return eval_model(model, r); };
    return minimize(f, config);
}

ArgminResult argmin_mixture(const PipelinePrediction& prediction, const OptimizeConfig& config,
                            const std::string& chain) {
    const PipelineChain* target = nullptr;
    if (!chain.empty()) {
        target = prediction.chain(chain);
        if (!target) fail(ErrorKind::MissingDomain, "optimize: pipeline has no chain '" + chain + "'");
    } else if ((target = prediction.chain(kOverallChain)) == nullptr) {
        if (prediction.chains.size() != 1) {
            fail(ErrorKind::InvalidArgument, "optimize: pipeline has several domain chains; name one");
        }
        target = &prediction.chains.front();
    }
    if (target->mixing) {
        auto result = argmin_mixture(target->mixing->model, config);
        return result;
    }
    return argmin_mixture(target->boosted_mixing->model, config);
}

double critical_proportion(double c, double k, double t, double L0) {
    if (!(k > 0.0) || !std::isfinite(k)) fail(ErrorKind::InvalidArgument, "critical: k must be positive");
    if (!std::isfinite(c) || !std::isfinite(t) || !std::isfinite(L0)) {
        fail(ErrorKind::InvalidArgument, "critical: coefficients must be finite");
    }
    const double ratio = (L0 - c) / k;
    if (!(ratio > 0.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "critical: (L0 - c)/k = " << ratio << " is not positive; L0 is at or below the irreducible loss";
        fail(ErrorKind::NoSolution, os.str());
    }
    if (std::abs(t) < 1e-12) fail(ErrorKind::Degenerate, "critical: |t| < 1e-12, the law does not depend on r");
    const double r = std::log(ratio) / t;
    if (!(r >= 0.0 && r <= 1.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "critical: solution r = " << r << " lies outside [0, 1]";
        fail(ErrorKind::NoSolution, os.str());
    }
    const double residual = std::abs(c + k * std::exp(t * r) - L0);
    if (residual > 1e-9) {
        std::ostringstream os;
        os << "critical: residual check failed, |L(r) - L0| = " << residual;
        fail(ErrorKind::NoSolution, os.str());
    }
    return r;
}

double critical_proportion(const ExpDomainLaw& law, double L0) {
    if (law.t.size() != 1) fail(ErrorKind::DimensionMismatch, "critical: expected a two-domain law with one slope");
    return critical_proportion(law.c, law.k, law.t[0], L0);
}

ParetoReport pareto_report(std::span<const MixingLawModel> laws, std::span<const std::string> domains, double grid_step) {
    if (laws.empty()) fail(ErrorKind::InvalidArgument, "pareto: at least one law is required");
    if (!domains.empty() && domains.size() != laws.size()) {
        fail(ErrorKind::DimensionMismatch, "pareto: one domain name per law");
    }
    const std::size_t m = laws.front().dims();
    for (const auto& law : laws) {
        if (law.dims() != m) fail(ErrorKind::DimensionMismatch, "pareto: laws disagree on M", "dimension");
    }
    ParetoReport report;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        report.domains.push_back(domains.empty() ? laws[i].validation_domains().front() : domains[i]);
    }
    for (auto& mix : grid_simplex(m, grid_step, laws.front().training_domains())) {
        ParetoRow row{std::move(mix), {}, false};
        for (const auto& law : laws) row.losses.push_back(eval_model(law, row.mixture).overall);
        report.rows.push_back(std::move(row));
    }

    // Skyline: in lexicographic order of loss vectors a row can only be
    // dominated by an earlier one, and checking the frontier suffices.
    std::vector<std::size_t> order(report.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return report.rows[a].losses < report.rows[b].losses; });
    const auto dominates = [](const std::vector<double>& a, const std::vector<double>& b) {
        bool strict = false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] > b[i]) return false;
            strict = strict || a[i] < b[i];
        }
        return strict;
    };
    std::vector<std::size_t> frontier;
    for (std::size_t idx : order) {
        const auto& losses = report.rows[idx].losses;
        const bool dominated = std::any_of(frontier.begin(), frontier.end(),
                                           [&](std::size_t f) { return dominates(report.rows[f].losses, losses); });
        if (!dominated) {
            report.rows[idx].non_dominated = true;
            frontier.push_back(idx);
        }
    }
    return report;
}

}  // namespace mixlaw
