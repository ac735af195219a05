import math
import pathlib
import random

import pytest

import mixlaw

GOLDEN = pathlib.Path(__file__).resolve().parent.parent / "golden"


def random_simplex(rng, m):
    g = [rng.gammavariate(1.0, 1.0) for _ in range(m)]
    s = sum(g)
    r = [v / s for v in g]
    r[-1] = 1.0 - sum(r[:-1])
    return r


def test_two_domain_matches_m4():
    assert mixlaw.eval_two_domain(2.0, 0.5, 1.0, 0.5) == pytest.approx(2.0 + 0.5 * math.exp(0.5), rel=1e-15)
    assert mixlaw.eval_m4(2.0, 0.5, [1.0, 0.0], [0.3, 0.7]) == pytest.approx(
        mixlaw.eval_two_domain(2.0, 0.5, 1.0, 0.3), abs=1e-12
    )


def test_critical_proportion_examples():
    assert mixlaw.critical_proportion(2.0, 1.0, 3.0, 3.0) == 0.0
    assert mixlaw.critical_proportion(2.0, 0.5, 1.0, 2.0 + 0.5 * math.exp(0.5)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(mixlaw.MixlawError) as err:
        mixlaw.critical_proportion(2.0, 1.0, 3.0, 1.5)
    assert err.value.kind == "no_solution"


def test_simplex_errors_carry_rule():
    with pytest.raises(mixlaw.MixlawError) as err:
        mixlaw.check_mixture([0.5, 0.3])
    assert err.value.rule == "simplex_sum"


def test_explicit_fit_recovers_law_and_optimizes():
    rng = random.Random(3)
    c, k, t = 1.2, 0.8, [-2.0, 0.5, 0.3]
    mixtures = [random_simplex(rng, 3) for _ in range(24)]
    losses = [mixlaw.eval_m4(c, k, t, r) for r in mixtures]
    model, train_mae = mixlaw.fit_explicit(mixtures, losses, seed=1)
    assert train_mae <= 1e-6
    for _ in range(8):
        r = random_simplex(rng, 3)
        assert model.predict(r) == pytest.approx(mixlaw.eval_m4(c, k, t, r), abs=1e-3)
    best = mixlaw.argmin_mixture(model, grid_step=0.05)
    assert sum(best["mixture"]) == pytest.approx(1.0, abs=1e-9)
    assert best["loss"] <= best["grid_loss"]


def test_implicit_weights_on_simplex():
    rng = random.Random(5)
    mixtures = [random_simplex(rng, 2) for _ in range(16)]
    losses = [0.5 * mixlaw.eval_m4(1.0, 1.0, [-2.0, 0.3], r) + 0.5 * mixlaw.eval_m4(1.5, 0.6, [0.4, -1.5], r) for r in mixtures]
    model, _ = mixlaw.fit_implicit(mixtures, losses, K=2, seed=2)
    assert model.aggregation == "implicit"
    assert sum(model.weights) == pytest.approx(1.0, abs=1e-12)
    assert all(w >= 0 for w in model.weights)


def test_power_law_fit():
    xs = [1000.0 * i for i in range(1, 13)]
    losses = [2.0 + 20.0 * x ** -0.3 for x in xs]
    law, _ = mixlaw.fit_power_law(xs, losses)
    assert law.alpha == pytest.approx(-0.3, abs=1e-3)
    assert law.predict(90000.0) == pytest.approx(2.0 + 20.0 * 90000.0 ** -0.3, rel=1e-4)


def test_design_helpers():
    zero, nonzero = mixlaw.enumerate_candidates([1.0, 1.0, 1.0], 0.125)
    assert len(zero) + len(nonzero) == 18
    assert len(mixlaw.grid_simplex(3, 0.125)) == 45
    a = mixlaw.sample_design([1.0, 1.0, 1.0], 0.125, 8, seed=4)
    assert a == mixlaw.sample_design([1.0, 1.0, 1.0], 0.125, 8, seed=4)
    assert sum(1 for r in a if 0.0 in r) == 2


def test_golden_artifact_round_trip():
    text = (GOLDEN / "implicit.json").read_text()
    art = mixlaw.LawArtifact.parse(text)
    assert art.serialize() == text
    assert art.kind == "mixing"
    assert art.training_domains == ["web", "code", "books"]
    for inputs, stored in art.fitted:
        overall, _ = art.predict(inputs)
        assert abs(overall - stored) <= 1e-9
    best = art.optimize(grid_step=0.05)
    assert len(best["mixture"]) == 3

    power = mixlaw.LawArtifact.load(str(GOLDEN / "power.json"))
    assert power.kind == "power"
    assert power.predict_x(power.fitted[0][0][0]) == power.fitted[0][1]


def test_model_artifact_wrapping(tmp_path):
    art = mixlaw.LawArtifact.from_power_law(mixlaw.PowerLaw(1.0, 2.0, -0.5))
    path = tmp_path / "law.json"
    art.save(str(path))
    again = mixlaw.LawArtifact.load(str(path))
    assert again.serialize() == art.serialize()
    assert again.predict_x(4.0) == 2.0
