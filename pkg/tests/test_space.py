import json
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from czcurve import ValidationError
from czcurve.space import (DiscreteMeasure, FiniteMetricSpace, NormedSpace, covering_number, doubling_constant,
                           embedding_error, is_metric, kuratowski_embed, measure_doubling_constant,
                           regularity_constants, upper_regularity_constant, upper_regularity_exact)


def line_space(xs):
    xs = np.asarray(xs, dtype=float)
    return FiniteMetricSpace(dist=np.abs(xs[:, None] - xs[None, :]))


# ---- construction

def test_rejects_asymmetric_and_triangle_violations():
    with pytest.raises(ValidationError):
        FiniteMetricSpace(dist=[[0, 1], [2, 0]])
    with pytest.raises(ValidationError):
        FiniteMetricSpace(dist=[[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(ValidationError):
        FiniteMetricSpace(dist=[[1.0]])


def test_json_round_trip():
    M = line_space([0, 1, 3])
    doc = json.loads(json.dumps(M.to_json()))
    M2 = FiniteMetricSpace.from_json(doc)
    assert np.array_equal(M2.dist, M.dist)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.floats(-3, 3), st.sampled_from(["euclid", "sup", "p3"]))
def test_norm_axioms(x, y, r, kind):
    sp = {"euclid": NormedSpace.euclidean(3), "sup": NormedSpace.sup(3), "p3": NormedSpace(3, "p", 3.0)}[kind]
    x, y = np.array(x), np.array(y)
    assert sp.norm(x) >= 0
    assert sp.norm(np.zeros(3)) == 0
    assert np.isclose(sp.norm(r * x), abs(r) * sp.norm(x), rtol=1e-12, atol=1e-12)
    assert sp.norm(x + y) <= sp.norm(x) + sp.norm(y) + 1e-12


def test_dual_norm_pairing():
    sp = NormedSpace(2, "p", 3.0)
    y = np.array([0.3, -0.7])
    gen = np.random.default_rng(1)
    xs = gen.normal(size=(2000, 2))
    ratio = np.abs(xs @ y) / sp.norm(xs)
    assert ratio.max() <= sp.dual_norm(y) * (1 + 1e-12)


# ---- Kuratowski embedding

def test_embed_two_points():
    E = kuratowski_embed(line_space([0, 1]))
    assert np.array_equal(E.coords, [[0, 1], [1, 0]])
    assert np.max(np.abs(E.coords[0] - E.coords[1])) == 1


def test_embed_one_point():
    E = kuratowski_embed(line_space([0]))
    assert np.array_equal(E.coords, [[0]])


def test_embed_grid_subset_isometric():
    gen = np.random.default_rng(3)
    grid = np.array([[i, j] for i in range(30) for j in range(30)], dtype=float)
    pts = grid[gen.choice(len(grid), 200, replace=False)]
    M = FiniteMetricSpace(coords=pts)
    E = kuratowski_embed(M)
    # oracle: explicit pairwise loop
    worst = max(abs(np.max(np.abs(E.coords[i] - E.coords[j])) - M.dist[i, j])
                for i, j in combinations(range(len(M)), 2))
    assert worst <= 1e-12
    assert embedding_error(M, E) <= 1e-12


# ---- doubling

def test_doubling_three_collinear_points_open_balls():
    # B(1, 2) = {0, 1, 2}; open balls of radius 1 contain only their center, so 3 are needed
    M = line_space([0, 1, 2])
    est = covering_number(M, 1, 2.0)
    assert est.exact and est.value == 3


def test_doubling_three_collinear_points_slightly_larger_radius():
    # just above r = 2 the center's half-radius ball already reaches both neighbours
    M = line_space([0, 1, 2])
    est = covering_number(M, 1, 2.0 + 1e-9)
    assert est.exact and est.value == 1


def test_doubling_one_point():
    assert doubling_constant(line_space([0]), [1.0]).value == 1


def test_doubling_grid_sup_metric():
    pts = np.array([[i, j] for i in range(16) for j in range(16)], dtype=float)
    M = FiniteMetricSpace(coords=pts, norm=NormedSpace.sup(2))
    est = doubling_constant(M, [1.5, 3.0, 6.0], centers=range(0, 256, 17))
    assert est.value <= 16


def test_doubling_monotone_in_grid():
    gen = np.random.default_rng(0)
    M = FiniteMetricSpace(coords=gen.uniform(size=(40, 2)))
    full = doubling_constant(M, [0.1, 0.2, 0.4]).value
    sub = doubling_constant(M, [0.2, 0.4]).value
    assert sub <= full


def test_doubling_empty_grid_rejected():
    with pytest.raises(ValidationError):
        doubling_constant(line_space([0, 1]), [])


# ---- regularity

def test_upper_regularity_uniform_segment():
    K = 200
    xs = np.arange(K) / (K - 1)
    mu = DiscreteMeasure(line_space(xs), np.full(K, 1.0 / K))
    C = upper_regularity_constant(mu, 1, (2.0 / K, 1.0))
    assert 1.0 <= C <= 3.0


def test_upper_regularity_single_atom():
    mu = DiscreteMeasure(line_space([0.0]), [1.0])
    assert upper_regularity_constant(mu, 1, (1.0, 1.0)) == 1.0


def test_upper_regularity_two_points_counting():
    mu = DiscreteMeasure(line_space([0.0, 1.0]), [1.0, 1.0])
    assert upper_regularity_constant(mu, 1, (2.0, 2.0)) == 1.0


def test_upper_regularity_scales_with_weights():
    gen = np.random.default_rng(5)
    mu = DiscreteMeasure(FiniteMetricSpace(coords=gen.uniform(size=(50, 2))), gen.uniform(size=50))
    C = upper_regularity_constant(mu, 1, (0.05, 1.0))
    assert upper_regularity_constant(mu.scaled(4.0), 1, (0.05, 1.0)) == 4.0 * C


def test_regularity_circle():
    K = 1024
    t = 2 * np.pi * np.arange(K) / K
    mu = DiscreteMeasure(FiniteMetricSpace(coords=np.column_stack([np.cos(t), np.sin(t)])),
                         np.full(K, 2 * np.pi / K))
    est = regularity_constants(mu, (0.05, 1.0))
    assert 1.0 <= est.reg <= np.pi


def test_regularity_segment_interior():
    K = 1001
    h = 1.0 / (K - 1)
    xs = np.arange(K) * h
    mu = DiscreteMeasure(line_space(xs), np.full(K, h))
    est = regularity_constants(mu, (0.01, 0.25))
    # oracle: direct summation over the same grid of radii
    hi = lo = None
    for r in est.radii:
        m = np.array([mu.weights[np.abs(xs - x) < r].sum() for x in xs]) / r
        hi = m.max() if hi is None else max(hi, m.max())
        lo = m.min() if lo is None else min(lo, m.min())
    assert est.C_upper == pytest.approx(hi, rel=1e-12)
    assert est.reg == pytest.approx(max(hi, 1 / lo), rel=1e-12)
    # continuum value 2, plus at most one extra atom of mass h in a ball of radius >= 0.01
    assert est.reg <= 2.0 + h / 0.01 + 1e-12


def test_regularity_atom_flags_non_regular():
    mu = DiscreteMeasure(line_space([0.0]), [1.0])
    est = regularity_constants(mu, (0.5, 1000.0), reg_threshold=100)
    assert not est.regular
    assert est.C_lower == pytest.approx(1 / 1000.0, rel=1e-12)


def test_regularity_zero_mass_rejected():
    with pytest.raises(ValidationError):
        regularity_constants(DiscreteMeasure(line_space([0.0, 1.0]), [0.0, 0.0]), (0.5, 1.0))


def test_exact_upper_regularity_dominates_grid():
    gen = np.random.default_rng(8)
    mu = DiscreteMeasure(FiniteMetricSpace(coords=gen.uniform(size=(60, 2))), gen.uniform(size=60))
    assert upper_regularity_exact(mu, 1, 0.05, 1.0) >= upper_regularity_constant(mu, 1, (0.05, 1.0)) * (1 - 1e-12)


def test_measure_doubling_brute_force():
    gen = np.random.default_rng(9)
    xs = np.sort(gen.uniform(size=12))
    mu = DiscreteMeasure(line_space(xs), gen.uniform(0.5, 1.0, size=12))
    D = measure_doubling_constant(mu)
    # oracle: scan a dense radius grid
    best = 0.0
    for i in range(12):
        d = np.abs(xs - xs[i])
        for r in np.geomspace(1e-4, 2.0, 4000):
            best = max(best, mu.weights[d < 2 * r].sum() / mu.weights[d < r].sum())
    assert best <= D * (1 + 1e-12)
    assert D <= best * 1.01


def test_is_metric():
    assert is_metric([[0, 1], [1, 0]])
    assert not is_metric([[0, 1], [3, 0]])
