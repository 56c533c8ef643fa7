import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from complexcut.experiments import (
    ExperimentConfig, angsync_objective, complex_gaussian, is_rank_one, mimo_instance,
    random_integer_objective, recover_signal, round_to_rank1, run, snap,
)
from complexcut.linalg import INF, rank_one, roots_of_unity
from complexcut.oracle import brute_max
from complexcut.relax import FeasibleSet, Kind, solve_relaxation

Q3 = np.eye(3) - np.ones((3, 3))


def test_snap():
    z = np.array([np.exp(0.1j), np.exp(2.2j), -0.3j, 0.0])
    np.testing.assert_allclose(snap(z, 3), [1, np.exp(2j * np.pi / 3), np.exp(4j * np.pi / 3), 1])
    out = snap(z, INF)
    np.testing.assert_allclose(np.abs(out), 1.0)
    assert out[2] == pytest.approx(-1j)


@given(st.integers(3, 8), st.integers(0, 10_000))
def test_rounding_recovers_rank_one_vertex(m, seed):
    rng = np.random.default_rng(seed)
    x0 = roots_of_unity(m)[rng.integers(0, m, 5)]
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    c = a + a.conj().T
    x, lb = round_to_rank1(rank_one(x0), c, m, trials=10, rng=rng)
    phase = x[0] / x0[0]
    np.testing.assert_allclose(x, phase * x0, atol=1e-9)
    assert lb == pytest.approx((x0.conj() @ c @ x0).real, abs=1e-9)


def test_rounding_of_identity_is_a_lower_bound():
    rng = np.random.default_rng(0)
    best = brute_max(Q3, 3)[0]
    x, lb = round_to_rank1(np.eye(3), Q3, 3, trials=50, rng=rng)
    assert lb <= best + 1e-9
    assert np.allclose(np.abs(x), 1)


def test_zero_objective_gives_zero_bounds():
    res = solve_relaxation(np.zeros((4, 4)), FeasibleSet(Kind.TRIANGLE, 4, 3))
    assert res.value == pytest.approx(0.0, abs=1e-9)
    assert round_to_rank1(res.X, np.zeros((4, 4)), 3, 5, np.random.default_rng(1))[1] == 0.0


def test_random_integer_objective(rng):
    q = random_integer_objective(6, rng)
    assert np.all(np.diag(q) == 0)
    np.testing.assert_array_equal(q, q.conj().T)
    assert np.all(np.abs(q.real) <= 10) and np.all(np.abs(q.imag) <= 10)
    assert np.all(q.real == np.round(q.real))


def test_complex_gaussian_variance():
    z = complex_gaussian(np.random.default_rng(3), 200_000)
    assert np.var(z.real) == pytest.approx(0.5, abs=0.01)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)


def test_mimo_objective_is_negative_residual(rng):
    inst = mimo_instance(4, 14, 3, 0.5, rng)
    assert inst.D.shape == (14, 4)
    x = roots_of_unity(3)[rng.integers(0, 3, 4)]
    hom = np.concatenate([[1.0], x])
    val = (hom.conj() @ inst.objective @ hom).real
    assert val == pytest.approx(-np.linalg.norm(inst.D @ x - inst.r) ** 2)
    phase = np.exp(0.7j)
    np.testing.assert_allclose(recover_signal(rank_one(phase * np.concatenate([[1], inst.c])), 3),
                               inst.c, atol=1e-12)


def test_angsync_objective(rng):
    c = angsync_objective(6, 0.0, rng)
    np.testing.assert_allclose(c, np.ones((6, 6)))
    c = angsync_objective(6, 2.0, rng)
    np.testing.assert_allclose(np.diag(c), 1.0)


def test_config_validation_and_defaults(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig("nope", seed=1)
    with pytest.raises(ValueError):
        ExperimentConfig("mimo", seed=1, trials=0)
    cfg = ExperimentConfig("mimo", seed=1)
    assert cfg.n == 30 and cfg.channel_rows == 40 and cfg.m == [3, 4]
    cfg = ExperimentConfig("angsync", seed=1)
    assert cfg.n == 10 and cfg.sigma == pytest.approx([2 / 3, 1, 4 / 3])
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": "random-obj", "seed": 5, "n": 6, "m": 3}))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.m == [3] and cfg.n == 6


@pytest.mark.parametrize("cfg", [
    ExperimentConfig("random-obj", seed=3, n=6, m=[3, 4], trials=2, rounding_trials=20),
    ExperimentConfig("mimo", seed=3, n=5, m=[3], sigma=[0.3, 1.0], trials=2, rounding_trials=20),
    ExperimentConfig("angsync", seed=3, n=6, sigma=[2 / 3], p=[0.0, 1.0], trials=2),
], ids=["random-obj", "mimo", "angsync"])
def test_runs_are_deterministic_and_sandwiched(cfg, tmp_path):
    first = run(cfg)
    csv1, json1 = first.write(tmp_path / "a")
    csv2, _ = run(cfg).write(tmp_path / "b")
    assert csv1.read_text() == csv2.read_text()
    assert json.loads(json1.read_text())["experiment"] == cfg.experiment
    for row in first.rows:
        for ub, lb, flag in (("opt_T", "lb", "rank1_T"), ("ub_E", "lb_E", "rank1_E"),
                             ("ub_T", "lb_T", "rank1_T")):
            if ub in row and lb in row:
                assert row[lb] <= row[ub] + 1e-6
                if row[flag]:
                    assert abs(row[lb] - row[ub]) <= 1e-5
        if "opt_E" in row:
            assert row["opt_T"] <= row["opt_E"] + 1e-6


def test_trial_rows_do_not_depend_on_trial_count():
    one = run(ExperimentConfig("random-obj", seed=9, n=5, m=[3], trials=1, rounding_trials=5))
    three = run(ExperimentConfig("random-obj", seed=9, n=5, m=[3], trials=3, rounding_trials=5))
    assert one.rows[0] == three.rows[0]


def test_mimo_rank_one_solutions_recover_signal():
    report = run(ExperimentConfig("mimo", seed=2, n=6, m=[4], sigma=[0.2], trials=3, rounding_trials=10))
    for row in report.rows:
        if row["rank1_T"]:
            assert row["recovered_T"]


def test_angsync_needs_six_nodes():
    with pytest.raises(ValueError):
        run(ExperimentConfig("angsync", seed=1, n=5))


def test_rank_flag():
    assert is_rank_one(np.ones((3, 3)))
    assert not is_rank_one(np.eye(3))
    assert is_rank_one(np.ones((3, 3)) + 1e-7 * np.eye(3), tol=1e-5)
