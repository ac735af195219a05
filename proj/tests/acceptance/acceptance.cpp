// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion names
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mixlaw/design.hpp"
#include "mixlaw/fit.hpp"
#include "mixlaw/io.hpp"
#include "mixlaw/optimize.hpp"
#include "mixlaw/pipeline.hpp"
#include "synth.hpp"

using namespace mixlaw;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> notes;  // printed under the criterion line

    void require(bool ok, const std::string& note) {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + note);
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double linf(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
    return d;
}

// --- law recovery -----------------------------------------------------------------------

Outcome law_recovery() {
    Outcome o;
    int cases = 0, passed = 0;
    double worst_ratio = 0.0;
    for (std::size_t m : {2, 3, 5}) {
        for (double sigma : {0.0, 0.005}) {
            const double bound = std::max(1e-3, 2 * sigma);
            double worst = 0.0, worst_oracle = 0.0;
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                std::mt19937_64 rng(100 * m + seed + (sigma > 0 ? 50 : 0));
                const auto truth = synth::random_truth(rng, 1, m);
                std::function<double(std::span<const double>)> law;
                if (m == 2) {
                    // Two-domain form in the first proportion.
                    const double c = truth.c[0], k = truth.k[0], t = truth.t[0][0] - truth.t[0][1];
                    const double k2 = k * std::exp(truth.t[0][1]);
                    law = [=](std::span<const double> r) { return c + k2 * std::exp(t * r[0]); };
                } else {
                    law = [&](std::span<const double> r) { return truth.domain(0, r); };
                }
                const auto fit_mix = synth::random_mixtures(rng, m, 24), val_mix = synth::random_mixtures(rng, m, 8);
                const auto fit = synth::samples(fit_mix, law, sigma, &rng);
                const auto val = synth::samples(val_mix, law, sigma, &rng);
                FitConfig config;
                config.seed = seed;
                const auto model = fit_explicit(fit, Form::M4, config).model;
                const double mae = mean_absolute_error(model, val);
                const double oracle = synth::mae(val_mix, [&](const Mixture& r) { return eval_model(model, r).overall; }, law);
                worst = std::max(worst, mae);
                worst_oracle = std::max(worst_oracle, oracle);
                worst_ratio = std::max(worst_ratio, mae / bound);
                ++cases;
                passed += mae <= bound;
            }
            o.require(worst <= bound, fmt("M=%zu sigma=%.3f: worst val MAE %.3g (bound %.3g), vs noiseless truth %.3g", m, sigma,
                                          worst, bound, worst_oracle));
        }
    }
    o.detail = fmt("%d/%d fits within max(1e-3, 2 sigma); worst MAE/bound %.3f", passed, cases, worst_ratio);
    return o;
}

// --- form selection ---------------------------------------------------------------------

Outcome form_selection() {
    Outcome o;
    int m4_over_m3 = 0, m1_base = 0, m4_base = 0;
    const int seeds = 20;
    const double sigma = 0.005;
    for (int seed = 0; seed < seeds; ++seed) {
        std::mt19937_64 rng(700 + seed);
        const auto truth = synth::random_truth(rng, 1, 3);
        const auto law = [&](std::span<const double> r) { return truth.domain(0, r); };
        const auto fit = synth::samples(synth::random_mixtures(rng, 3, 24), law, sigma, &rng);
        const auto val = synth::samples(synth::random_mixtures(rng, 3, 8), law, sigma, &rng);
        FitConfig config;
        config.seed = static_cast<std::uint64_t>(seed);
        const auto table = select_form(fit, val, config);
        const auto val_of = [&](Form f) { return table.forms[static_cast<std::size_t>(f)].val_mae; };
        const auto m1 = val_of(Form::M1), m3 = val_of(Form::M3), m4 = val_of(Form::M4);
        m4_over_m3 += m4 && (!m3 || *m4 < *m3);
        m1_base += m1 && *m1 < table.baseline_val_mae;
        m4_base += m4 && *m4 < table.baseline_val_mae;
    }
    o.require(m4_over_m3 >= 19, fmt("M4 below M3 in %d/%d seeds (need 19)", m4_over_m3, seeds));
    o.require(m1_base == seeds, fmt("M1 beats the midpoint baseline in %d/%d", m1_base, seeds));
    o.require(m4_base == seeds, fmt("M4 beats the midpoint baseline in %d/%d", m4_base, seeds));
    o.detail = fmt("M4<M3 %d/20, M1<base %d/20, M4<base %d/20 (sigma %.3f)", m4_over_m3, m1_base, m4_base, sigma);
    return o;
}

// --- implicit vs explicit -----------------------------------------------------------------

Outcome implicit_vs_explicit() {
    Outcome o;
    const std::size_t latent = 5, m = 5;
    const double sigma = 0.002;
    const std::vector<int> Ks{1, 2, 5, 10, 30};
    std::vector<int> within(Ks.size(), 0), worse_than_5(Ks.size(), 0);
    std::vector<double> worst_ratio(Ks.size(), 0.0), worst_oracle_ratio(Ks.size(), 0.0);
    const int seeds = 10;
    for (int seed = 0; seed < seeds; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const auto truth = synth::random_truth(rng, latent, m);
        const auto oracle = [&](std::span<const double> r) { return truth.overall(r); };
        const auto fit_mix = synth::random_mixtures(rng, m, 160), val_mix = synth::random_mixtures(rng, m, 40);
        const auto data = synth::records(truth, fit_mix, "f", sigma, &rng);
        const auto held_out = samples_for(synth::records(truth, val_mix, "v", sigma, &rng));

        // Explicit aggregation: one law per observed domain, combined with the known weights.
        std::vector<DomainLaw> laws;
        FitConfig config;
        config.seed = static_cast<std::uint64_t>(seed);
        for (std::size_t i = 0; i < latent; ++i) {
            laws.push_back(fit_explicit(data, "v" + std::to_string(i), Form::M4, config).model.domain_laws()[0]);
        }
        const auto explicit_model = MixingLawModel::explicit_sum(laws, truth.s);
        const double e = mean_absolute_error(explicit_model, held_out);
        const double e_oracle = synth::mae(val_mix, [&](const Mixture& r) { return eval_model(explicit_model, r).overall; }, oracle);

        std::vector<double> maes;
        for (std::size_t q = 0; q < Ks.size(); ++q) {
            config.K = Ks[q];
            const auto model = fit_implicit(data, config).model;
            maes.push_back(mean_absolute_error(model, held_out));
            const double io = synth::mae(val_mix, [&](const Mixture& r) { return eval_model(model, r).overall; }, oracle);
            within[q] += maes[q] <= 1.25 * e;
            worst_ratio[q] = std::max(worst_ratio[q], maes[q] / e);
            worst_oracle_ratio[q] = std::max(worst_oracle_ratio[q], io / e_oracle);
        }
        for (std::size_t q = 0; q < 2; ++q) worse_than_5[q] += maes[q] > maes[2];
    }
    for (std::size_t q = 2; q < Ks.size(); ++q) {
        o.require(within[q] >= 8, fmt("K=%d within 1.25x explicit held-out MAE in %d/%d seeds (worst %.3fx; vs noiseless truth %.2fx)",
                                      Ks[q], within[q], seeds, worst_ratio[q], worst_oracle_ratio[q]));
    }
    for (std::size_t q = 0; q < 2; ++q) {
        o.require(worse_than_5[q] >= 8, fmt("K=%d worse than K=5 in %d/%d seeds", Ks[q], worse_than_5[q], seeds));
    }
    o.detail = fmt("K=5/10/30 within 1.25x in %d/%d/%d of 10; K=1/2 worse than K=5 in %d/%d of 10", within[2], within[3],
                   within[4], worse_than_5[0], worse_than_5[1]);
    return o;
}

// --- nested pipeline ------------------------------------------------------------------------

Outcome pipeline_end_to_end() {
    Outcome o;
    const std::vector<double> sizes{7e7, 1.6e8, 3.05e8, 4.1e8};
    const std::vector<std::string> names{"web", "code", "books"};
    double worst_rel = 0.0, worst_linf = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(40 + seed);
        synth::PipelineTruth truth;
        truth.mix = synth::random_truth(rng, 2, 3);
        const auto mixes = synth::random_mixtures(rng, 3, 16, names);
        const auto targets = synth::random_mixtures(rng, 3, 10, names);
        PipelineConfig config;
        config.sizes = sizes;
        config.S0 = 30000;
        config.S_target = 3 * config.S0;
        config.N_target = 10 * sizes.back();
        config.fit_config.K = 5;
        config.fit_config.seed = seed;
        const auto p = run_pipeline(synth::curves(truth, mixes, sizes, config.S0, 2000), targets, config);

        const double N = config.N_target, S = static_cast<double>(config.S_target);
        double rel = 0.0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const auto r = targets[i].proportions();
            rel = std::max(rel, std::abs(*p.predicted[i].overall / truth.overall(N, S, r) - 1.0));
            for (std::size_t d = 0; d < 2; ++d) {
                const double want = truth.domain(d, N, S, r);
                rel = std::max(rel, std::abs(p.predicted[i].per_domain.at("v" + std::to_string(d)) / want - 1.0));
            }
        }

        // Brute force over the 0.001 grid of the truth at the target scale.
        std::vector<double> best;
        double best_loss = INFINITY;
        for (int a = 0; a <= 1000; ++a) {
            for (int b = 0; a + b <= 1000; ++b) {
                const std::vector<double> r{a / 1000.0, b / 1000.0, (1000 - a - b) / 1000.0};
                const double v = truth.overall(N, S, r);
                if (v < best_loss) best_loss = v, best = r;
            }
        }
        const auto found = argmin_mixture(p, OptimizeConfig{});
        const double d = linf(found.mixture.proportions(), best);
        worst_rel = std::max(worst_rel, rel);
        worst_linf = std::max(worst_linf, d);
        o.require(rel <= 0.02, fmt("seed %llu: worst relative error %.4f over %zu targets x 3 losses", (unsigned long long)seed, rel,
                                   targets.size()));
        o.require(d <= 0.02, fmt("seed %llu: argmin L-inf distance %.4f from the 0.001-grid truth argmin", (unsigned long long)seed, d));
    }
    o.detail = fmt("worst relative error %.4f (<= 0.02), worst argmin L-inf %.4f (<= 0.02)", worst_rel, worst_linf);
    return o;
}

// --- design enumeration -----------------------------------------------------------------------

Outcome design_enumeration() {
    Outcome o;
    const DesignSpace space{{1, 1, 1}, 0.125, 1, {}};
    const auto c = enumerate_candidates(space);
    std::set<std::vector<double>> got, oracle;
    for (const auto* set : {&c.zero, &c.nonzero}) {
        for (const auto& mix : *set) got.insert({mix.proportions().begin(), mix.proportions().end()});
    }
    const std::vector<double> vals{1, 0.5, 0.25, 0.125, 0};
    for (double a : vals) {
        for (double b : vals) {
            if (1 - a - b >= 0) oracle.insert({a, b, 1 - a - b});
        }
    }
    o.require(got == oracle && oracle.size() == 18 && c.zero.size() + c.nonzero.size() == 18,
              fmt("enumeration gives %zu candidates, oracle %zu, sets equal: %s", c.zero.size() + c.nonzero.size(), oracle.size(),
                  got == oracle ? "yes" : "no"));

    const auto grid = grid_simplex(3, 0.125);
    std::set<std::vector<double>> g, go;
    for (const auto& mix : grid) g.insert({mix.proportions().begin(), mix.proportions().end()});
    for (int a = 0; a <= 8; ++a) {
        for (int b = 0; a + b <= 8; ++b) go.insert({a / 8.0, b / 8.0, (8 - a - b) / 8.0});
    }
    o.require(grid.size() == 45 && g == go, fmt("grid_simplex(3, 0.125) gives %zu points, matches oracle: %s", grid.size(),
                                                g == go ? "yes" : "no"));

    int checked = 0, ok = 0;
    for (const auto& base : {DesignSpace{{1, 1, 1}, 0.125, 1, {}}, DesignSpace{{1, 0.75, 0.5, 0.5}, 0.0625, 1, {}},
                             DesignSpace{{1, 1, 1, 1, 1, 1, 1}, 0.0625, 1, {}}}) {
        const auto cand = enumerate_candidates(base);
        for (int N = 1; N <= 40; ++N) {
            if (cand.zero.size() < static_cast<std::size_t>(N / 4) || cand.nonzero.size() < static_cast<std::size_t>(N - N / 4)) continue;
            auto space_n = base;
            space_n.N = N;
            const auto r = sample_design(space_n, static_cast<std::uint64_t>(N));
            const auto zeros = std::count_if(r.sampled.begin(), r.sampled.end(), [](const Mixture& mix) { return mix.has_zero(); });
            ++checked;
            ok += zeros == N / 4 && r.sampled.size() == static_cast<std::size_t>(N);
        }
    }
    o.require(ok == checked && checked > 0, fmt("floor(N/4) zero-containing mixtures in %d/%d samplings", ok, checked));
    o.detail = fmt("18 candidates, 45 grid points, floor(N/4) in %d/%d", ok, checked);
    return o;
}

// --- critical proportion ------------------------------------------------------------------------

std::optional<double> bisect(double c, double k, double t, double L0) {
    const auto f = [&](double r) { return c + k * std::exp(t * r) - L0; };
    double lo = 0.0, hi = 1.0;
    if (f(lo) * f(hi) > 0) return std::nullopt;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(lo) * f(mid) <= 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome critical() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> cu(0.0, 3.0), ku(0.05, 3.0), tu(-5.0, 5.0), ru(0.0, 1.0);
    double worst = 0.0;
    int solved = 0;
    for (int i = 0; i < 1000; ++i) {
        double t = tu(rng);
        if (std::abs(t) < 1e-3) t = 1.0;
        const double c = cu(rng), k = ku(rng);
        const double L0 = c + k * std::exp(t * ru(rng));
        const auto b = bisect(c, k, t, L0);
        if (!b) continue;
        worst = std::max(worst, std::abs(critical_proportion(c, k, t, L0) - *b));
        ++solved;
    }
    o.require(solved == 1000 && worst <= 1e-9, fmt("%d/1000 instances, worst |closed form - bisection| %.3g", solved, worst));

    o.require(critical_proportion(2.0, 1.0, 3.0, 3.0) == 0.0, "c=2 k=1 t=3 L0=3 gives 0");
    const double half = critical_proportion(2.0, 0.5, 1.0, 2.0 + 0.5 * std::exp(0.5));
    o.require(std::abs(half - 0.5) <= 1e-15, fmt("c=2 k=0.5 t=1 L0=2+0.5e^0.5 gives %.17g", half));
    bool no_solution = false;
    try {
        critical_proportion(2.0, 1.0, 3.0, 1.5);
    } catch (const Error& e) {
        no_solution = e.kind() == ErrorKind::NoSolution;
    }
    o.require(no_solution, "c=2 k=1 t=3 L0=1.5 raises no_solution");
    o.detail = fmt("worst deviation %.3g over 1000 instances; 3 worked examples", worst);
    return o;
}

// --- invariant suites ---------------------------------------------------------------------------

Outcome invariants() {
    Outcome o;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> tu(-4.0, 4.0), cu(0.0, 3.0), ku(0.05, 2.0), u(0.0, 1.0);

    // Simplex closure: generated mixtures, design output and argmin results stay on the simplex.
    {
        bool ok = true;
        for (int i = 0; i < 200; ++i) {
            const auto m = static_cast<std::size_t>(2 + i % 6);
            const auto r = Mixture::from(synth::random_simplex(rng, m));
            ok = ok && std::abs(std::accumulate(r.proportions().begin(), r.proportions().end(), 0.0) - 1.0) <= 1e-12;
        }
        const auto design = sample_design({{1, 0.75, 0.5, 0.5}, 0.0625, 20, {}}, 9);
        for (const auto& mix : design.sampled) {
            ok = ok && std::abs(std::accumulate(mix.proportions().begin(), mix.proportions().end(), 0.0) - 1.0) <= 1e-12;
        }
        const auto truth = synth::random_truth(rng, 3, 4);
        std::vector<DomainLaw> laws;
        for (std::size_t i = 0; i < 3; ++i) laws.push_back(DomainLaw::from_exp({truth.c[i], truth.k[i], truth.t[i]}));
        OptimizeConfig config;
        config.bounds = {{0.05, 0.6}, {0.0, 1.0}, {0.1, 0.9}, {0.0, 0.5}};
        const auto a = argmin_mixture(MixingLawModel::explicit_sum(laws, truth.s), config);
        double sum = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            const double v = a.mixture[j];
            sum += v;
            ok = ok && v >= (*config.bounds)[j].first - 1e-9 && v <= (*config.bounds)[j].second + 1e-9;
        }
        ok = ok && std::abs(sum - 1.0) <= 1e-9;
        o.require(ok, "simplex closure of mixtures, design samples and bounded argmin");
    }

    // M=2 compatibility.
    {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double c = 2 * u(rng), k = 0.1 + u(rng), t = 10 * u(rng) - 5, r1 = u(rng);
            worst = std::max(worst, std::abs(eval_m4({c, k, {t, 0.0}}, std::vector<double>{r1, 1.0 - r1}) - eval_two_domain(c, k, t, r1)));
        }
        o.require(worst <= 1e-12, fmt("M=2 compatibility, worst %.3g (<= 1e-12)", worst));
    }

    // Permutation symmetry (bit-exact) and monotonicity sign vs finite differences.
    {
        bool perm_ok = true, sign_ok = true;
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t m = 2 + trial % 5;
            ExpDomainLaw law{cu(rng), ku(rng), {}};
            for (std::size_t j = 0; j < m; ++j) law.t.push_back(tu(rng));
            const auto r = synth::random_simplex(rng, m);
            const double v = eval_m4(law, r);
            std::vector<std::size_t> perm(m);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            ExpDomainLaw permuted{law.c, law.k, std::vector<double>(m)};
            std::vector<double> rp(m);
            for (std::size_t j = 0; j < m; ++j) {
                permuted.t[j] = law.t[perm[j]];
                rp[j] = r[perm[j]];
            }
            perm_ok = perm_ok && eval_m4(permuted, rp) == v;
            const auto coeffs = DomainLaw::from_exp(law).coefficients();
            for (std::size_t j = 0; j < m; ++j) {
                if (std::abs(law.t[j]) <= 1e-3) continue;
                auto up = r, down = r;
                up[j] += 1e-6;
                down[j] -= 1e-6;
                const double fd = eval_candidate(Form::M4, coeffs, up) - eval_candidate(Form::M4, coeffs, down);
                sign_ok = sign_ok && (fd > 0) == (law.t[j] > 0);
            }
        }
        o.require(perm_ok, "permutation symmetry, bit-exact over 200 laws");
        o.require(sign_ok, "sign of d/dr_j matches sign of t_j by finite differences");
    }

    // Implicit objective gradient.
    {
        const auto truth = synth::random_truth(rng, 3, 3);
        const auto samples = synth::samples(synth::random_mixtures(rng, 3, 20), [&](std::span<const double> r) { return truth.overall(r); });
        const ImplicitObjective objective(samples, 4, 1e-3);
        std::normal_distribution<double> g(0.0, 1.0);
        double worst = 0.0;
        const double h = 1e-5;
        for (int point = 0; point < 20; ++point) {
            std::vector<double> p(objective.parameter_count());
            for (auto& v : p) v = g(rng);
            std::vector<double> grad(p.size());
            objective.value_and_gradient(p, grad);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                auto up = p, down = p;
                up[i] += h;
                down[i] -= h;
                const double fd = (objective.value(up) - objective.value(down)) / (2 * h);
                num += (fd - grad[i]) * (fd - grad[i]);
                den += grad[i] * grad[i];
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
        o.require(worst <= 1e-4, fmt("implicit objective gradient vs central differences, worst relative error %.3g", worst));
    }

    // Ensemble median boundedness.
    {
        bool ok = true;
        std::uniform_real_distribution<double> w(0.1, 2.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<MixingLawModel> members;
            std::vector<double> weights;
            for (int i = 0; i < 5; ++i) {
                members.push_back(MixingLawModel::single(DomainLaw::from_exp({w(rng), w(rng), {w(rng) - 1, w(rng) - 1, w(rng) - 1}})));
                weights.push_back(w(rng));
            }
            const EnsembleModel e(members, weights);
            const auto r = synth::random_simplex(rng, 3);
            double lo = INFINITY, hi = -INFINITY;
            for (const auto& m : members) {
                lo = std::min(lo, eval_model(m, r).overall);
                hi = std::max(hi, eval_model(m, r).overall);
            }
            const double v = eval_model(e, r).overall;
            ok = ok && v >= lo && v <= hi;
        }
        o.require(ok, "ensemble prediction within member range over 200 ensembles");
    }

    // Serialization round-trips and determinism under fixed seeds.
    {
        const auto truth = synth::random_truth(rng, 2, 3);
        const auto records = synth::records(truth, synth::random_mixtures(rng, 3, 30), "r", 0.003, &rng);
        FitConfig config;
        config.seed = 5;
        config.K = 3;
        config.boost_stages = 4;
        const auto implicit_a = fit_implicit(records, config), implicit_b = fit_implicit(records, config);
        const auto boosted_a = fit_boosted(records, config), boosted_b = fit_boosted(records, config);
        const auto explicit_a = fit_explicit(records, "v1", Form::M4, config), explicit_b = fit_explicit(records, "v1", Form::M4, config);

        std::vector<LawArtifact> artifacts(4);
        artifacts[0].model = implicit_a.model;
        artifacts[1].model = boosted_a.model;
        artifacts[2].model = explicit_a.model;
        artifacts[3].model = PowerLaw{1.7, 3.2, -0.31};
        bool round = true;
        for (auto& a : artifacts) {
            a.provenance.seed = 5;
            a.provenance.data_digest = data_digest(records);
            const auto text = serialize_artifact(a);
            round = round && serialize_artifact(parse_artifact(text)) == text;
        }
        const auto table = format_runs(records);
        std::istringstream in(table);
        round = round && format_runs(parse_runs(in)) == table;
        o.require(round, "serialize -> parse -> serialize is identical for 4 artifact kinds and a run table");

        LawArtifact ia, ib, ba, bb, ea, eb;
        ia.model = implicit_a.model;
        ib.model = implicit_b.model;
        ba.model = boosted_a.model;
        bb.model = boosted_b.model;
        ea.model = explicit_a.model;
        eb.model = explicit_b.model;
        const bool fits_same = serialize_artifact(ia) == serialize_artifact(ib) && serialize_artifact(ba) == serialize_artifact(bb) &&
                               serialize_artifact(ea) == serialize_artifact(eb);
        const DesignSpace space{{1, 1, 1, 1}, 0.0625, 16, {}};
        const bool design_same = sample_design(space, 3).sampled == sample_design(space, 3).sampled;
        const auto subset_a = select_fitting_subset(records, 12, 3, config, "v0");
        const auto subset_b = select_fitting_subset(records, 12, 3, config, "v0");
        o.require(fits_same && design_same && subset_a.run_ids == subset_b.run_ids,
                  "fixed seeds give identical implicit, boosted and explicit fits, design samples and subsets");
    }

    o.detail = "simplex closure, M=2 compatibility, permutation symmetry, monotonicity signs, gradient check, median bounds, "
               "round-trips, determinism";
    return o;
}

struct Criterion {
    const char* name;
    double budget_s;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {"law_recovery", 60, law_recovery},
        {"form_selection", 300, form_selection},
        {"implicit_vs_explicit", 600, implicit_vs_explicit},
        {"pipeline_end_to_end", 300, pipeline_end_to_end},
        {"design_enumeration", 1, design_enumeration},
        {"critical_proportion", 1, critical},
        {"invariant_suites", INFINITY, invariants},
    };
    const std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.name)) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s %s: %s [%.2fs", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
        if (std::isfinite(c.budget_s)) std::printf(" of %.0fs%s", c.budget_s, in_time ? "" : ", over budget");
        std::printf("]\n");
        for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion matched\n");
        return 2;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
