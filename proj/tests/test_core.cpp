#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mixlaw/core.hpp"
#include "synth.hpp"

using namespace mixlaw;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
}

std::string rule_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.rule();
    }
    FAIL("expected an Error");
    return {};
}

}  // namespace

TEST_CASE("mixture construction enforces the simplex") {
    const auto m = Mixture::from({0.2, 0.3, 0.5}, {"web", "code", "books"});
    CHECK(m.size() == 3);
    CHECK(m.domain_names()[1] == "code");
    CHECK(Mixture::from({0.5, 0.5}).domain_names() == std::vector<std::string>{"d0", "d1"});

    CHECK(rule_of([] { Mixture::from({0.5, 0.3}); }) == "simplex_sum");
    CHECK(rule_of([] { Mixture::from({1.2, -0.2}); }) == "proportion_range");
    CHECK(rule_of([] { Mixture::from({0.5, 0.5}, {"a", "a"}); }) == "unique_names");
    CHECK(kind_of([] { Mixture::from({0.5, 0.5}, {"a"}); }) == ErrorKind::DimensionMismatch);
    CHECK(kind_of([] { Mixture::from({}); }) == ErrorKind::InvalidArgument);
    // Within tolerance is accepted.
    CHECK_NOTHROW(Mixture::from({0.5, 0.5 + 5e-10}));
}

TEST_CASE("run record invariants name the rule") {
    RunRecord rec;
    rec.run_id = "a";
    rec.domain_losses["web"] = 2.0;
    CHECK_NOTHROW(rec.validate());
    rec.step = 0;
    CHECK(rule_of([&] { rec.validate(); }) == "step_positive");
    rec.step = 1;
    rec.model_size = 0.5;
    CHECK(rule_of([&] { rec.validate(); }) == "model_size_positive");
    rec.model_size = 1.0;
    rec.domain_losses["web"] = -1.0;
    CHECK(rule_of([&] { rec.validate(); }) == "loss_positive");
    rec.domain_losses["web"] = 1.0;
    rec.overall_loss = std::numeric_limits<double>::infinity();
    CHECK(rule_of([&] { rec.validate(); }) == "loss_positive");
}

TEST_CASE("law invariants") {
    CHECK_THROWS_AS(ExpDomainLaw({1.0, 0.0, {1.0}}).validate(), Error);
    CHECK_THROWS_AS(ExpDomainLaw({-0.1, 1.0, {1.0}}).validate(), Error);
    CHECK_THROWS_AS(ExpDomainLaw({1.0, 1.0, {NAN}}).validate(), Error);
    CHECK_THROWS_AS(PowerLaw({-1.0, 1.0, -0.5}).validate(), Error);
    CHECK_THROWS_AS(PowerLaw({1.0, 0.0, -0.5}).validate(), Error);
}

TEST_CASE("two-domain law") {
    CHECK(eval_two_domain(1.0, 2.0, -1.0, 0.0) == 3.0);
    CHECK(eval_two_domain(1.0, 2.0, 0.0, 0.7) == 3.0);
    // 0.5 + 1.5 e^{-0.5}
    CHECK(eval_two_domain(0.5, 1.5, -2.0, 0.25) == doctest::Approx(1.4097959895689501).epsilon(1e-15));
}

TEST_CASE("M4 law") {
    const std::vector<double> flat{0.2, 0.3, 0.5};
    CHECK(eval_m4({0.5, 1.0, {0, 0, 0}}, flat) == 1.5);
    const std::vector<double> r{0.5, 0.25, 0.25};
    // 0.5 + e^{-0.75}
    CHECK(eval_m4({0.5, 1.0, {-2, 0, 1}}, r) == doctest::Approx(0.97236655274101471).epsilon(1e-15));
    CHECK(kind_of([] { eval_m4({0.5, 1.0, {1, 2}}, std::vector<double>{1.0}); }) == ErrorKind::DimensionMismatch);

    for (double r1 : {0.0, 0.5, 1.0}) {
        const std::vector<double> rr{r1, 1.0 - r1};
        CHECK(eval_m4({1.3, 0.7, {-1.7, 0.0}}, rr) == eval_two_domain(1.3, 0.7, -1.7, r1));
    }
}

TEST_CASE("exponent clamping keeps evaluation finite") {
    const std::vector<double> r{1.0, 0.0};
    const double v = eval_m4({0.0, 1.0, {1e6, 0.0}}, r);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(std::exp(kExpClamp)));
}

TEST_CASE("candidate forms") {
    const std::vector<double> m1{1, 1, 1, 0, 0};
    CHECK(eval_candidate(Form::M1, m1, std::vector<double>{0.5, 0.5}) == 3.0);
    const std::vector<double> m2{0, 1, std::log(2.0), std::log(3.0)};
    CHECK(eval_candidate(Form::M2, m2, std::vector<double>{1.0, 1.0}) == doctest::Approx(5.0).epsilon(1e-15));
    const std::vector<double> m3{0.7, 1.3, 4.0, -2.0, 9.0};
    CHECK(eval_candidate(Form::M3, m3, std::vector<double>{0.6, 0.4, 0.0}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(kind_of([&] { eval_candidate(Form::M2, m3, std::vector<double>{0.5, 0.5}); }) == ErrorKind::DimensionMismatch);

    CHECK(coefficient_count(Form::M1, 3) == 7);
    CHECK(coefficient_count(Form::M2, 3) == 5);
    CHECK(coefficient_count(Form::M3, 3) == 5);
    CHECK(coefficient_count(Form::M4, 3) == 5);
    for (Form f : {Form::M1, Form::M2, Form::M3, Form::M4}) CHECK(form_from_string(to_string(f)) == f);
}

TEST_CASE("coefficient round trip through DomainLaw") {
    const std::vector<double> m1{0.4, 1.0, 2.0, -1.0, 0.5};
    const auto law = DomainLaw::from_coefficients(Form::M1, m1);
    CHECK(law.coefficients() == m1);
    const ExpDomainLaw e{1.0, 2.0, {0.1, -0.2}};
    const auto d = DomainLaw::from_exp(e);
    CHECK(d.to_exp().t == e.t);
    CHECK(d.to_exp().k == e.k);
}

TEST_CASE("model aggregation") {
    const std::vector<DomainLaw> laws{DomainLaw::from_exp({1.0, 1.0, {-1, 0}}), DomainLaw::from_exp({2.0, 0.5, {0, -2}}),
                                      DomainLaw::from_exp({0.5, 2.0, {1, 1}})};
    const std::vector<double> r{0.3, 0.7};
    const auto first = MixingLawModel::explicit_sum(laws, {1, 0, 0});
    CHECK(eval_model(first, r).overall == eval_law(laws[0], r));

    const std::vector<DomainLaw> same(3, laws[1]);
    const auto uniform = MixingLawModel::implicit_sum(same, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(eval_model(uniform, r).overall == doctest::Approx(eval_law(laws[1], r)).epsilon(1e-15));
    CHECK(uniform.weights_learned());
    CHECK_FALSE(first.weights_learned());

    CHECK_THROWS_AS(MixingLawModel::explicit_sum(laws, {0.5, 0.4, 0.0}), Error);
    CHECK_THROWS_AS(MixingLawModel::explicit_sum(laws, {1.5, -0.5, 0.0}), Error);
    CHECK(kind_of([&] { eval_model(first, std::vector<double>{1.0}); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("overall prediction is linear in the weights") {
    std::mt19937_64 rng(7);
    const auto truth = synth::random_truth(rng, 3, 3);
    std::vector<DomainLaw> laws;
    for (std::size_t i = 0; i < 3; ++i) laws.push_back(DomainLaw::from_exp({truth.c[i], truth.k[i], truth.t[i]}));
    const std::vector<double> s1{0.2, 0.5, 0.3}, s2{0.6, 0.1, 0.3};
    for (int trial = 0; trial < 50; ++trial) {
        const auto r = synth::random_simplex(rng, 3);
        const double lam = synth::random_simplex(rng, 2)[0];
        std::vector<double> mix(3);
        for (int i = 0; i < 3; ++i) mix[i] = lam * s1[i] + (1 - lam) * s2[i];
        const double a = eval_model(MixingLawModel::explicit_sum(laws, s1), r).overall;
        const double b = eval_model(MixingLawModel::explicit_sum(laws, s2), r).overall;
        const double ab = eval_model(MixingLawModel::explicit_sum(laws, mix), r).overall;
        CHECK(ab == doctest::Approx(lam * a + (1 - lam) * b).epsilon(1e-13));
    }
}

TEST_CASE("ensemble weighted median") {
    const auto member = [](double c) {
        return MixingLawModel::single(DomainLaw::from_exp({c, 1.0, {0.0, 0.0}}));
    };
    const std::vector<double> r{0.5, 0.5};
    // Members predict 2.0 and 4.0 with equal weight.
    const EnsembleModel two({member(1.0), member(3.0)}, {1.0, 1.0});
    CHECK(eval_model(two, r).overall == 4.0);

    const std::vector<double> values{5.0, 1.0, 3.0}, weights{1.0, 1.0, 1.0};
    CHECK(weighted_median_index(values, weights) == 2);
    const std::vector<double> heavy{0.1, 5.0, 0.1};
    CHECK(weighted_median_index(values, heavy) == 1);

    CHECK_THROWS_AS(EnsembleModel({member(1.0)}, {0.0}), Error);
    CHECK_THROWS_AS(EnsembleModel({}, {}), Error);
}

TEST_CASE("ensemble prediction stays within member range") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<MixingLawModel> members;
        std::vector<double> w;
        for (int i = 0; i < 5; ++i) {
            members.push_back(MixingLawModel::single(DomainLaw::from_exp({u(rng), u(rng), {u(rng) - 1, u(rng) - 1}})));
            w.push_back(u(rng));
        }
        const EnsembleModel e(members, w);
        const auto r = synth::random_simplex(rng, 2);
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& m : members) {
            lo = std::min(lo, eval_model(m, r).overall);
            hi = std::max(hi, eval_model(m, r).overall);
        }
        const double v = eval_model(e, r).overall;
        CHECK(v >= lo);
        CHECK(v <= hi);
    }
}

TEST_CASE("power law") {
    CHECK(eval_power_law({1.0, 5.0, 0.0}, 123.0) == 6.0);
    CHECK(eval_power_law({0.0, 2.0, -0.5}, 4.0) == 1.0);
    double prev = INFINITY;
    for (double x = 10; x < 1e12; x *= 10) {
        const double v = eval_power_law({0.3, 1.0, -1.0}, x);
        CHECK(v < prev);
        CHECK(v > 0.3);
        prev = v;
    }
    CHECK(prev - 0.3 < 1e-10);
    CHECK_THROWS_AS(eval_power_law({0.3, 1.0, -1.0}, 0.0), Error);
    CHECK(to_perplexity(std::log(7.0)) == doctest::Approx(7.0));
}

TEST_CASE("M4 invariants at random simplex points") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> tu(-4.0, 4.0), cu(0.0, 3.0), ku(0.05, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + trial % 4;
        ExpDomainLaw law{cu(rng), ku(rng), {}};
        for (std::size_t j = 0; j < m; ++j) law.t.push_back(tu(rng));
        const auto r = synth::random_simplex(rng, m);
        const double v = eval_m4(law, r);

        CHECK(v > law.c);  // lower bound

        // Permutation symmetry, bit-exact.
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ExpDomainLaw permuted{law.c, law.k, std::vector<double>(m)};
        std::vector<double> rp(m);
        for (std::size_t j = 0; j < m; ++j) {
            permuted.t[j] = law.t[perm[j]];
            rp[j] = r[perm[j]];
        }
        CHECK(eval_m4(permuted, rp) == v);

        // d/dr_j has the sign of t_j.
        for (std::size_t j = 0; j < m; ++j) {
            if (std::abs(law.t[j]) <= 1e-3) continue;
            auto up = r, down = r;
            up[j] += 1e-6;
            down[j] -= 1e-6;
            const double fd = (eval_candidate(Form::M4, DomainLaw::from_exp(law).coefficients(), up) -
                               eval_candidate(Form::M4, DomainLaw::from_exp(law).coefficients(), down)) / 2e-6;
            CHECK((fd > 0) == (law.t[j] > 0));
        }
    }
}

TEST_CASE("M=2 compatibility holds across the simplex") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> tu(-5.0, 5.0), u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double c = 2 * u(rng), k = 0.1 + u(rng), t = tu(rng), r1 = u(rng);
        const std::vector<double> r{r1, 1.0 - r1};
        worst = std::max(worst, std::abs(eval_m4({c, k, {t, 0.0}}, r) - eval_two_domain(c, k, t, r1)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("order-invariant sum") {
    std::vector<double> v{1e16, 1.0, -1e16, 3.0, 0.5};
    const double a = order_invariant_sum(v);
    std::reverse(v.begin(), v.end());
    CHECK(order_invariant_sum(v) == a);
}
