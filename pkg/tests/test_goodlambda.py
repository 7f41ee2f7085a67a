import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from czcurve import ValidationError
from czcurve.curve import circle, discretize_H1
from czcurve.goodlambda import (Instance, StageError, delta_from_epsilon, f_ensemble, feasibility_threshold,
                                goodlambda_check, is_feasible, lambda_grid, layer_cake, level_set,
                                localization_check, lp_from_goodlambda, piece_of, pnorm_p, pointwise_constant,
                                run_theorem_pipeline, truncate)
from czcurve.kernel import riesz_kernel
from czcurve.space import DiscreteMeasure, FiniteMetricSpace, NormedSpace
from czcurve.whitney import christ_cubes, whitney_decompose

E2 = NormedSpace.euclidean(2)


def atoms(w):
    w = np.asarray(w, dtype=float)
    return DiscreteMeasure(FiniteMetricSpace(coords=np.arange(len(w), dtype=float)[:, None]), w)


# ---- level sets

def test_level_set_examples():
    nu = atoms([1.0, 2.0, 3.0])
    T = np.array([0.5, 1.0, 2.0])
    mask, m = level_set(T, nu, 5.0)
    assert not mask.any() and m == 0.0
    mask, m = level_set(T, nu, 0.0)
    assert mask.all() and m == 6.0
    # strict inequality
    assert level_set(T, nu, 1.0)[1] == 3.0


def test_level_set_median_circle():
    mu = discretize_H1(circle(512))
    T = np.cos(np.arange(512) * 0.37) + np.arange(512) * 1e-6
    lam = np.median(T)
    _, m = level_set(T, mu, lam)
    assert m == pytest.approx(mu.weights[T > lam].sum(), rel=1e-15)
    assert abs(m - mu.total_mass / 2) <= mu.weights.max()


# ---- delta and feasibility

def test_delta_example():
    assert delta_from_epsilon(1.0, 0.5, 1.0, 4.0, 10.0) == 1 / 64


def test_delta_branch_strictly_below():
    d = delta_from_epsilon(1.0, 1.0, 1e-9, 1.0, 10.0)
    assert d < 1.0 / 40 and d == pytest.approx(0.99 / 40)


@settings(max_examples=30)
@given(st.floats(1e-4, 10), st.floats(1e-3, 1), st.floats(1e-2, 100), st.floats(1, 1e3), st.floats(1, 1e4))
def test_delta_homogeneous_in_eps(eps, theta, c, CD, C):
    assert delta_from_epsilon(2 * eps, theta, c, CD, C) == pytest.approx(2 * delta_from_epsilon(eps, theta, c, CD, C),
                                                                       rel=1e-14)


def test_delta_vanishes_with_theta():
    vals = [delta_from_epsilon(1.0, th, 1.0, 4.0, 1.0) for th in (1e-2, 1e-4, 1e-8)]
    assert vals[-1] < vals[0] and vals[-1] == pytest.approx(1e-8 / 32)


@pytest.mark.parametrize("bad", [(0, 1, 1, 1, 1), (1, 0, 1, 1, 1), (1, 1, -1, 1, 1), (1, 1, 1, 0, 1),
                                 (1, 1, 1, 1, 0)])
def test_delta_rejects_nonpositive(bad):
    with pytest.raises(ValidationError):
        delta_from_epsilon(*bad)


def test_feasibility_threshold_p2_half():
    t = feasibility_threshold(2.0, 0.5)
    assert t == math.sqrt(8 / 7) - 1
    assert abs(t - 0.069) < 1e-3
    assert is_feasible(t * (1 - 1e-9), 2.0, 0.5) and not is_feasible(t * (1 + 1e-9), 2.0, 0.5)


def test_pointwise_constant():
    c = pointwise_constant(2.0, 3.0, 1, 1.0)
    assert c["C"] == 162 * 6 and c["transfer"] == 12.0
    assert c["C_rigorous"] == 486 * 6
    with pytest.raises(ValidationError):
        pointwise_constant(0.0, 1.0, 1, 1.0)


# ---- good-lambda check

def test_goodlambda_empty_level_set():
    nu = atoms([1.0, 1.0])
    row = goodlambda_check(nu, [0.1, 0.2], [0.0, 0.0], 10.0, 0.25, 0.1, 0.5)
    assert row.mass_omega == 0 and row.mass_bad == 0 and row.passed


def test_goodlambda_masses_by_hand():
    nu = atoms([1.0, 2.0, 3.0, 4.0])
    T = np.array([0.5, 2.0, 3.0, 4.0])
    M = np.array([0.0, 0.05, 1.0, 0.01])
    row = goodlambda_check(nu, T, M, 1.0, 0.25, 0.1, 1.0)
    assert row.mass_omega == 9.0
    assert row.mass_bad == 2.0 + 4.0
    assert row.bound == 0.75 * 9.0 and row.passed


def test_goodlambda_delta_below_min_maximal():
    nu = atoms([1.0, 1.0, 1.0])
    row = goodlambda_check(nu, [1.0, 2.0, 3.0], [5.0, 5.0, 5.0], 0.5, 0.25, 1e-3, 0.5)
    assert row.mass_bad == 0.0 and row.passed


def test_goodlambda_monotone_in_lambda():
    gen = np.random.default_rng(4)
    nu = atoms(gen.uniform(0.1, 1, 200))
    T, M = gen.exponential(size=200), gen.exponential(size=200)
    rows = [goodlambda_check(nu, T, M, lam, 0.25, 0.3, 0.5) for lam in np.linspace(0.01, 3, 60)]
    assert all(a.mass_omega >= b.mass_omega for a, b in zip(rows, rows[1:]))


def test_lambda_grid_ascending_quantiles():
    nu = atoms(np.ones(101))
    T = np.arange(101, dtype=float)
    g = lambda_grid(T, nu, 50)
    assert g.size == 50 and np.all(np.diff(g) >= 0) and g[0] >= T.min() and g[-1] <= T.max()
    assert lambda_grid(T, nu, 0).size == 0


# ---- L^p machinery

@settings(max_examples=30)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=40), st.floats(1.1, 4))
def test_layer_cake_identity(vals, p):
    nu = atoms(np.linspace(0.5, 1.5, len(vals)))
    g = np.asarray(vals)
    direct = pnorm_p(g, nu, p)
    assert layer_cake(g, nu, p) == pytest.approx(direct, rel=1e-12, abs=1e-300)


def test_truncation_monotone_and_exact():
    gen = np.random.default_rng(0)
    nu = atoms(gen.uniform(0.1, 1, 50))
    T = gen.exponential(size=50)
    ms = np.sort(gen.uniform(0, T.max() * 1.2, 10))
    for a, b in zip(ms, ms[1:]):
        assert np.all(truncate(T, a) <= truncate(T, b))
    assert pnorm_p(truncate(T, T.max()), nu, 2) == pnorm_p(T, nu, 2)
    assert pnorm_p(truncate(T, 2 * T.max()), nu, 2) == pnorm_p(T, nu, 2)


def test_lp_zero_operator():
    nu = atoms([1.0, 1.0])
    rep = lp_from_goodlambda(np.zeros(2), np.ones(2), nu, 2.0, [0.25], 0.5, lambda e: e, f=np.ones(2))
    assert rep.A_p == 0.0 and rep.feasible


def test_lp_grid_extends_until_feasible():
    nu = atoms([1.0, 1.0])
    rep = lp_from_goodlambda(np.ones(2), np.ones(2), nu, 2.0, [1.0], 0.5, lambda e: e / 10, f=np.ones(2))
    assert rep.feasible and rep.eps < feasibility_threshold(2.0, 0.5) and rep.chain_ok


def test_lp_bound_formula():
    nu = atoms([1.0, 3.0])
    T, M, f = np.array([1.0, 2.0]), np.array([0.5, 1.0]), np.array([1.0, 1.0])
    theta = 0.5
    rep = lp_from_goodlambda(T, M, nu, 2.0, [0.03125], theta, lambda e: 0.1, f=f)
    expect = math.sqrt((0.25 + 3.0) / (0.01 * ((1 + 0.03125) ** -2 - (1 - theta / 4))))
    assert rep.bound_T == pytest.approx(expect, rel=1e-14)
    assert rep.A_p == pytest.approx(expect / 2.0, rel=1e-14)
    assert rep.bound_T >= rep.norm_T


# ---- localization

@pytest.fixture(scope="module")
def circle_instance():
    mu = discretize_H1(circle(256))
    K = riesz_kernel(1, E2)
    M = mu.space
    return K, mu, M


def test_localization_f_inside_small_ball(circle_instance):
    K = circle_instance[0]
    mu = discretize_H1(circle(1024))
    M = mu.space
    X = np.asarray(M.coords)
    omega = X[:, 0] < 0.5
    W = whitney_decompose(christ_cubes(M), omega)
    p = min(range(len(W.pieces)), key=lambda i: W.pieces[i].k)
    piece = W.pieces[p]
    s = 8.0 ** -piece.k
    d0 = np.linalg.norm(X - X[piece.center], axis=1)
    f = np.where(d0 < 4 * s, 1.0 + X[:, 1], 0.0)
    inst = Instance.build(K, mu, f, C_nu=2.0)
    x = int(piece.members[np.argmax(inst.T[piece.members])])
    assert inst.T[x] > 0
    lam = inst.T[x] / 1.5
    rep = localization_check(inst, W, p, x, lam, 0.25, delta=inst.Mf[x] / lam)
    assert rep.qualifies and rep.passed
    assert rep.value == inst.T[x]


def test_localization_zero_f_vacuous(circle_instance):
    K, mu, M = circle_instance
    W = whitney_decompose(christ_cubes(M), np.asarray(M.coords)[:, 0] > 0.5)
    inst = Instance.build(K, mu, np.zeros(len(mu)), C_nu=2.0)
    rep = localization_check(inst, W, 0, int(W.pieces[0].members[0]), 1.0, 0.25, 0.1)
    assert not rep.qualifies and rep.passed


def test_localization_point_must_be_in_piece(circle_instance):
    K, mu, M = circle_instance
    W = whitney_decompose(christ_cubes(M), np.asarray(M.coords)[:, 0] > 0.5)
    owner = piece_of(W, len(mu))
    outsider = int(np.flatnonzero(owner != 0)[0])
    inst = Instance.build(K, mu, np.ones(len(mu)), C_nu=2.0)
    with pytest.raises(ValidationError):
        localization_check(inst, W, 0, outsider, 1.0, 0.25, 0.1)


# ---- pipeline

def test_ensemble_deterministic():
    X = np.random.default_rng(0).normal(size=(30, 2))
    a, b = f_ensemble(X, 4, 9), f_ensemble(X, 4, 9)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert not np.array_equal(a[0], f_ensemble(X, 4, 10)[0])


def test_pipeline_rejects_self_intersecting_curve():
    with pytest.raises(StageError) as exc:
        run_theorem_pipeline({"curve": {"name": "figure_eight", "K": 256}})
    assert exc.value.stage == "curve"


def test_pipeline_line_zero_kernel():
    rep = run_theorem_pipeline({"curve": {"name": "line", "K": 128}, "kernel": {"kind": "zero"},
                                "ensemble": {"size": 2, "seed": 0}, "lambda_quantiles": 5})
    assert rep["passed"] and rep["lp"]["2.0"]["A_p"] == 0.0


@pytest.fixture(scope="module")
def small_pipeline():
    return run_theorem_pipeline({"curve": {"name": "circle", "K": 256}, "ensemble": {"size": 2, "seed": 0},
                                 "lambda_quantiles": 10})


def test_pipeline_small_circle(small_pipeline):
    rep = small_pipeline
    assert rep["passed"]
    assert rep["goodlambda"]["violations"] == 0 and rep["goodlambda"]["checked"] == 2 * 2 * 10
    assert np.isfinite(rep["lp"]["2.0"]["A_p"]) and rep["lp"]["2.0"]["A_p"] > 0


def test_pipeline_constant_audit(small_pipeline):
    consts = small_pipeline["constants"]
    for key in ("C_K", "C_nu", "C_D", "c", "theta", "eta", "C_pointwise"):
        assert key in consts and consts[key]["provenance"]
    assert any(k.startswith("delta") for k in consts) and any(k.startswith("eps") for k in consts)


def test_pipeline_rows_monotone(small_pipeline):
    rows = small_pipeline["goodlambda"]["rows"]
    for f in {r["f"] for r in rows}:
        for e in {r["eps"] for r in rows}:
            sel = sorted((r for r in rows if r["f"] == f and r["eps"] == e), key=lambda r: r["lam"])
            assert all(a["mass_omega"] >= b["mass_omega"] and a["mass_bad"] >= b["mass_bad"]
                       for a, b in zip(sel, sel[1:]))
