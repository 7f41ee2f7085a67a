"""Sampled curves in a normed space.

A :class:`SampledCurve` stores a parameter grid, positions and derivative
samples. Everything here works on the grid: suprema and infima are grid
maxima and minima, integrals are composite trapezoid sums. Pairwise checks
are exhaustive unless a function says otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from ._util import Estimate, ValidationError, rng
from .space import DiscreteMeasure, FiniteMetricSpace, NormedSpace, regularity_constants

INJECTIVITY_TOL = 1e-12
EXHAUSTIVE_PAIR_LIMIT = 4096
# relative slack for comparisons whose two sides are sums of rounded terms
ROUNDING_SLACK = 1e-12


@dataclass(frozen=True)
class SampledCurve:
    params: np.ndarray
    positions: np.ndarray
    derivs: np.ndarray
    space: NormedSpace
    closed: bool = False
    analytic: bool = False
    name: str = "curve"

    def __post_init__(self):
        t = np.asarray(self.params, dtype=float)
        x = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if t.ndim != 1 or t.size < 2:
            raise ValidationError("need at least two parameters")
        if not np.all(np.isfinite(t)) or not np.all(np.diff(t) > 0):
            raise ValidationError("params must be finite and strictly increasing")
        if x.shape[0] != t.size:
            raise ValidationError("positions and params differ in length")
        if x.shape[1] != self.space.dimension:
            raise ValidationError("position dimension does not match the space")
        d = None if self.derivs is None else np.atleast_2d(np.asarray(self.derivs, dtype=float))
        if d is None:
            d = wstar_derivative(x, t)
        elif d.shape != x.shape:
            raise ValidationError("derivs and positions differ in shape")
        for arr in (t, x, d):
            arr.setflags(write=False)
        object.__setattr__(self, "params", t)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "derivs", d)

    def __len__(self) -> int:
        return self.params.size

    @property
    def speeds(self) -> np.ndarray:
        return self.space.norm(self.derivs)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.params)

    def chord_quotients(self) -> np.ndarray:
        """``||gamma(t_{i+1}) - gamma(t_i)|| / (t_{i+1} - t_i)`` per grid interval."""
        return self.space.norm(np.diff(self.positions, axis=0)) / self.steps

    def to_json(self) -> dict:
        return {"params": self.params.tolist(), "positions": self.positions.tolist(),
                "derivs": self.derivs.tolist() if self.analytic else None,
                "norm": self.space.to_json(), "closed": self.closed}

    @classmethod
    def from_json(cls, doc: dict) -> "SampledCurve":
        x = np.atleast_2d(np.asarray(doc["positions"], dtype=float))
        space = NormedSpace.from_json(doc.get("norm", {"kind": "p", "p": 2}), x.shape[1])
        derivs = doc.get("derivs")
        return cls(np.asarray(doc["params"], dtype=float), x,
                   None if derivs is None else np.asarray(derivs, dtype=float),
                   space, bool(doc.get("closed", False)), derivs is not None, doc.get("name", "curve"))


@dataclass(frozen=True)
class CurveMetadata:
    """Grid-fitted constants of a curve.

    ``m``/``M`` are the grid infimum and supremum of the speed (``M`` also
    dominates every adjacent chord quotient). ``m_clamped``/``M_clamped``
    are ``min(1, m)`` and ``max(1, M)``, the values that enter the
    big-piece mass fraction.
    """

    alpha: float
    c: float
    m: float
    M: float
    delta: float
    c_exact: bool = True

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ValidationError("alpha must lie in (0, 1]")
        if not self.m > 0:
            raise ValidationError("degenerate speed")
        if not (self.m <= self.M < np.inf) or self.c < 0 or not self.delta > 0:
            raise ValidationError("inconsistent curve metadata")

    @property
    def m_clamped(self) -> float:
        return min(1.0, self.m)

    @property
    def M_clamped(self) -> float:
        return max(1.0, self.M)

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "c": self.c, "m": self.m, "M": self.M, "delta": self.delta,
                "m_clamped": self.m_clamped, "M_clamped": self.M_clamped, "c_exact": self.c_exact}


# ---------------------------------------------------------------- derivatives

def wstar_derivative(positions, params) -> np.ndarray:
    """Coordinatewise derivative: centered differences inside, second-order one-sided at the ends."""
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    t = np.asarray(params, dtype=float)
    if t.size < 3:
        raise ValidationError("finite-difference derivative needs at least 3 samples")
    return np.gradient(x, t, axis=0, edge_order=2)


def metric_derivative(curve: SampledCurve, i: int | None = None):
    """Symmetric chord quotient ``||gamma(t_{i+1}) - gamma(t_{i-1})|| / (t_{i+1} - t_{i-1})``.

    One-sided quotients at the two ends. ``i=None`` returns all nodes.
    """
    x, t, sp = curve.positions, curve.params, curve.space
    n = t.size
    if i is None:
        out = np.empty(n)
        out[1:-1] = sp.norm(x[2:] - x[:-2]) / (t[2:] - t[:-2])
        out[0] = sp.norm(x[1] - x[0]) / (t[1] - t[0])
        out[-1] = sp.norm(x[-1] - x[-2]) / (t[-1] - t[-2])
        return out
    if not 0 <= i < n:
        raise ValidationError(f"index {i} outside 0..{n - 1}")
    lo, hi = max(i - 1, 0), min(i + 1, n - 1)
    return float(sp.norm(x[hi] - x[lo]) / (t[hi] - t[lo]))


def speed_discrepancy(curve: SampledCurve) -> float:
    """max_i | ||gamma'(t_i)|| - metric derivative at t_i |."""
    return float(np.max(np.abs(curve.speeds - metric_derivative(curve))))


# ---------------------------------------------------------------- pairwise fits

def _row_pairs(n: int):
    for i in range(n - 1):
        yield i, slice(i + 1, n)


def holder_fit(derivs, params, alpha: float, space: NormedSpace | None = None, seed: int = 0) -> Estimate:
    """Smallest c with ``||g(t_i) - g(t_j)|| <= c |t_i - t_j|^alpha`` over sample pairs.

    Exhaustive for up to 4096 samples. Larger grids use every pair with
    index gap <= 64 plus 2**21 seeded random pairs; ``exact`` is then False.
    """
    if not (0 < alpha <= 1):
        raise ValidationError("alpha must lie in (0, 1]")
    g = np.atleast_2d(np.asarray(derivs, dtype=float))
    t = np.asarray(params, dtype=float)
    space = space or NormedSpace.euclidean(g.shape[1])
    n = t.size
    best = 0.0
    if n <= EXHAUSTIVE_PAIR_LIMIT:
        for i, sl in _row_pairs(n):
            q = space.norm(g[sl] - g[i]) / (t[sl] - t[i]) ** alpha
            best = max(best, float(q.max()))
        return Estimate(best, True)
    for gap in range(1, 65):
        q = space.norm(g[gap:] - g[:-gap]) / (t[gap:] - t[:-gap]) ** alpha
        best = max(best, float(q.max()))
    gen = rng(seed, 0xC0DE)
    i = gen.integers(0, n, 1 << 21)
    j = gen.integers(0, n, 1 << 21)
    keep = i != j
    i, j = i[keep], j[keep]
    q = space.norm(g[i] - g[j]) / np.abs(t[i] - t[j]) ** alpha
    best = max(best, float(q.max()))
    return Estimate(best, False, "index-gap <= 64 plus 2**21 random pairs")


def bilipschitz_window(curve: SampledCurve, metadata: CurveMetadata | None = None, m: float | None = None) -> float:
    """Largest grid delta with ``||gamma'(t_i) - gamma'(t_j)|| < m/2`` whenever ``|t_i - t_j| < delta``.

    This is the smallest parameter gap among pairs that violate the
    derivative criterion; the whole parameter length when none do.
    """
    if m is None:
        m = metadata.m if metadata is not None else float(curve.speeds.min())
    if not m > 0:
        raise ValidationError("degenerate speed")
    g, t, sp = curve.derivs, curve.params, curve.space
    delta = float(t[-1] - t[0])
    for i, sl in _row_pairs(t.size):
        bad = sp.norm(g[sl] - g[i]) >= m / 2
        if bad.any():
            # gaps grow with j, so the first violation is the nearest one
            delta = min(delta, float(t[i + 1 + int(np.argmax(bad))] - t[i]))
    return delta


def fit_metadata(curve: SampledCurve, alpha: float = 1.0) -> CurveMetadata:
    speeds = curve.speeds
    m = float(speeds.min())
    if not m > 0:
        raise ValidationError("degenerate speed")
    M = max(float(speeds.max()), float(curve.chord_quotients().max()))
    c = holder_fit(curve.derivs, curve.params, alpha, curve.space)
    delta = bilipschitz_window(curve, m=m)
    return CurveMetadata(alpha, float(c.value), m, M, delta, c.exact)


def bilipschitz_violations(curve: SampledCurve, metadata: CurveMetadata) -> dict:
    """Count grid pairs within the window breaking ``(m/2)|dt| <= ||d gamma|| <= M |dt|``."""
    x, t, sp = curve.positions, curve.params, curve.space
    lower = upper = checked = 0
    for i, sl in _row_pairs(t.size):
        dt = t[sl] - t[i]
        near = dt < metadata.delta
        if not near.any():
            continue
        dt = dt[near]
        dx = sp.norm(x[sl][near] - x[i])
        checked += dt.size
        lower += int(np.sum(dx < (metadata.m / 2) * dt * (1 - ROUNDING_SLACK)))
        upper += int(np.sum(dx > metadata.M * dt * (1 + ROUNDING_SLACK)))
    return {"pairs": checked, "lower_violations": lower, "upper_violations": upper}


def linear_approx(curve: SampledCurve, i0: int, t) -> np.ndarray:
    """``L(t) = gamma(t_{i0}) + (t - t_{i0}) gamma'(t_{i0})``; ``t`` scalar or array."""
    if not 0 <= i0 < len(curve):
        raise ValidationError(f"index {i0} outside the grid")
    t = np.asarray(t, dtype=float)
    return curve.positions[i0] + (t - curve.params[i0])[..., None] * curve.derivs[i0]


@dataclass(frozen=True)
class FlatnessResult:
    ratio: float
    c: float
    passed: bool
    witness: tuple


def flatness_check(curve: SampledCurve, metadata: CurveMetadata) -> FlatnessResult:
    """max over grid pairs of ``||gamma(t_i) - L_{t_i0}(t_i)|| / |t_i - t_i0|^(1+alpha)`` against c."""
    x, t, g, sp = curve.positions, curve.params, curve.derivs, curve.space
    a = metadata.alpha
    best, witness = 0.0, (0, 0)
    for i0 in range(t.size):
        dt = t - t[i0]
        dt[i0] = np.nan
        r = sp.norm(x - x[i0] - dt[:, None] * g[i0]) / np.abs(dt) ** (1 + a)
        r[i0] = -np.inf
        j = int(np.argmax(r))
        if r[j] > best:
            best, witness = float(r[j]), (i0, j)
    return FlatnessResult(best, metadata.c, bool(best <= metadata.c), witness)


# ---------------------------------------------------------------- measure and quadrature

def check_injective(curve: SampledCurve) -> None:
    """Reject two samples within 1e-12 of each other that are not grid neighbours.

    Closed curves may repeat their first point at the end.
    """
    tree = cKDTree(curve.positions)
    pairs = tree.query_pairs(INJECTIVITY_TOL, p=curve.space.exponent, output_type="ndarray")
    if pairs.size == 0:
        return
    t = curve.params
    h = float(curve.steps.max())
    last = len(curve) - 1
    for i, j in sorted(map(tuple, np.sort(pairs, axis=1))):
        if curve.closed and (i, j) == (0, last):
            continue
        if abs(t[j] - t[i]) > h:
            raise ValidationError(f"curve not injective: samples {i} and {j} (t={t[i]:.17g}, {t[j]:.17g}) coincide")


def quadrature_weights(curve: SampledCurve) -> np.ndarray:
    """Trapezoid weights times speed: ``||gamma'(t_i)|| (t_{i+1} - t_{i-1}) / 2``."""
    h = curve.steps
    w = np.empty(len(curve))
    w[0] = h[0] / 2
    w[-1] = h[-1] / 2
    w[1:-1] = (h[1:] + h[:-1]) / 2
    return w * curve.speeds


def curve_integral(curve: SampledCurve, f) -> float:
    check_injective(curve)
    vals = np.asarray(f(curve.positions), dtype=float)
    if vals.ndim == 0:
        vals = np.full(len(curve), float(vals))
    return float(np.dot(quadrature_weights(curve), vals))


def discretize_H1(curve: SampledCurve) -> DiscreteMeasure:
    """Arc-length measure as point masses at the samples, with the quadrature weights.

    On a closed curve the repeated end sample is folded into the first one,
    so the support has no duplicate points.
    """
    check_injective(curve)
    w = quadrature_weights(curve)
    x = curve.positions
    if curve.closed and len(curve) > 2 and np.array_equal(x[0], x[-1]):
        w = np.concatenate([[w[0] + w[-1]], w[1:-1]])
        x = x[:-1]
    return DiscreteMeasure(FiniteMetricSpace(coords=x, norm=curve.space), w)


def node_index_map(curve: SampledCurve) -> np.ndarray:
    """Support index of each grid node in :func:`discretize_H1`'s measure."""
    idx = np.arange(len(curve))
    if curve.closed and len(curve) > 2 and np.array_equal(curve.positions[0], curve.positions[-1]):
        idx[-1] = 0
    return idx


def normalize_curve(curve: SampledCurve, origin_index: int = 0) -> SampledCurve:
    """Translate so ``gamma(t_origin) = 0``, reparametrize affinely onto [0, 1], scale to unit length."""
    t = curve.params
    span = float(t[-1] - t[0])
    length = float(np.sum(quadrature_weights(curve)))
    if not length > 0:
        raise ValidationError("curve has zero length")
    s = 1.0 / length
    params = (t - t[0]) / span
    params[-1] = 1.0
    pos = (curve.positions - curve.positions[origin_index]) * s
    der = curve.derivs * (s * span)
    return replace(curve, params=params, positions=pos, derivs=der)


# ---------------------------------------------------------------- big pieces

@dataclass(frozen=True)
class BigPiece:
    a_index: int
    b_index: int
    interval: tuple
    theta: float
    mass_G: float
    mass_ball: float
    members: np.ndarray
    contained: bool
    mass_ok: bool
    diam_violations_proof: int
    diam_violations_stated: int
    diam_checks: int
    reg: float

    @property
    def passed(self) -> bool:
        return self.contained and self.mass_ok and self.diam_violations_proof == 0

    def to_json(self) -> dict:
        return {"a_index": self.a_index, "b_index": self.b_index, "interval": list(self.interval),
                "theta": self.theta, "mass_G": self.mass_G, "mass_ball": self.mass_ball,
                "contained": self.contained, "mass_ok": self.mass_ok,
                "diam_violations_4s_over_m": self.diam_violations_proof,
                "diam_violations_2s_over_m": self.diam_violations_stated,
                "diam_checks": self.diam_checks, "reg": self.reg}


def curve_regularity(curve: SampledCurve, measure: DiscreteMeasure | None = None) -> float:
    """reg of the arc-length measure over scales from 4x the largest grid chord up to the diameter."""
    mu = measure if measure is not None else discretize_H1(curve)
    h = float(curve.space.norm(np.diff(curve.positions, axis=0)).max())
    diam = float(mu.space.dist.max()) if len(mu) <= 4096 else _coord_diameter(mu.space)
    r_min = min(4 * h, diam)
    return regularity_constants(mu, (r_min, max(diam, r_min)), n=1).reg


def _coord_diameter(space: FiniteMetricSpace) -> float:
    best = 0.0
    for i in range(len(space)):
        best = max(best, float(space.row(i).max()))
    return best


def choose_big_piece(curve: SampledCurve, metadata: CurveMetadata, a_index: int, r: float,
                     measure: DiscreteMeasure | None = None, reg: float | None = None,
                     n_radii: int = 12) -> BigPiece:
    """Pick ``[a, b]`` with ``|b - a| = delta nu(B cap Gamma) / (2 M reg)``, snapped toward zero.

    ``b`` goes forward from ``a`` when the grid allows it, backward
    otherwise. ``G`` is the arc-length measure restricted to ``gamma([a, b])``.
    Verified: containment in the open ball, the mass fraction with
    ``theta = m delta / (4 M reg)`` (clamped m, M), and the preimage
    diameter of ``B(y, s) cap G`` for sampled y in G and s on a
    geometric grid, against both ``4s/inf||gamma'||`` and ``2s/inf||gamma'||``.
    """
    t = curve.params
    if not (isinstance(a_index, (int, np.integer)) and 0 <= a_index < t.size):
        raise ValidationError("ball center must be a grid node of the curve")
    if not r > 0:
        raise ValidationError("radius must be positive")
    mu = measure if measure is not None else discretize_H1(curve)
    reg = curve_regularity(curve, mu) if reg is None else float(reg)
    node = node_index_map(curve)
    center = curve.positions[a_index]
    d_center = curve.space.norm(mu.space.coords - center)
    mass_ball = float(mu.weights[d_center < r].sum())
    m, M = metadata.m_clamped, metadata.M_clamped
    delta = min(metadata.delta, 1.0) if t[-1] - t[0] <= 1.0 + 1e-12 else metadata.delta
    length = delta * mass_ball / (2 * M * reg)
    theta = m * delta / (4 * M * reg)
    a = t[a_index]
    if t[-1] - a >= a - t[0]:
        b_index = int(np.searchsorted(t, a + length, side="right") - 1)
        lo, hi = a_index, b_index
    else:
        b_index = int(np.searchsorted(t, a - length, side="left"))
        lo, hi = b_index, a_index
    if hi == lo:
        raise ValidationError("resolution too coarse: big piece shorter than one grid step")
    grid_nodes = np.arange(lo, hi + 1)
    members = np.unique(node[grid_nodes])
    mass_G = float(mu.weights[members].sum())
    contained = bool(np.all(d_center[members] < r))
    mass_ok = bool(mass_G >= theta * mass_ball)

    inf_speed = float(curve.speeds.min())
    pos = curve.positions[grid_nodes]
    tt = t[grid_nodes]
    span_G = float(np.max(curve.space.norm(pos - pos[0]))) if pos.shape[0] > 1 else 0.0
    step = float(curve.space.norm(np.diff(pos, axis=0)).min()) if pos.shape[0] > 1 else 1.0
    s_grid = np.geomspace(step, max(2 * span_G, 2 * step), n_radii)
    viol4 = viol2 = checks = 0
    ys = grid_nodes if grid_nodes.size <= 256 else grid_nodes[np.linspace(0, grid_nodes.size - 1, 256).astype(int)]
    for y in ys:
        dy = curve.space.norm(pos - curve.positions[y])
        for s in s_grid:
            inside = tt[dy < s]
            diam = float(inside.max() - inside.min()) if inside.size else 0.0
            checks += 1
            viol4 += diam > 4 * s / inf_speed
            viol2 += diam > 2 * s / inf_speed
    return BigPiece(int(a_index), int(b_index), (float(t[lo]), float(t[hi])), float(theta), mass_G, mass_ball,
                    members, contained, mass_ok, int(viol4), int(viol2), int(checks), float(reg))


def append_ray(curve_measure: DiscreteMeasure, v0, S_max: float, spacing: float | None = None,
               reg_scales: tuple | None = None):
    """Add the arc-length measure of the segment ``{s v0 : 3 <= s <= S_max}``.

    The segment is sampled at (close to) ``spacing``, by default the median
    nearest-neighbour gap of the curve samples, with trapezoid weights, so
    the added mass is ``S_max - 3``. Returns the new measure, its reg over
    ``reg_scales`` (default: 4 spacings up to the diameter) and the number
    of ray samples.
    """
    sp = curve_measure.space
    if sp.coords is None:
        raise ValidationError("ray appending needs a coordinate space")
    v0 = np.asarray(v0, dtype=float)
    if abs(float(sp.norm.norm(v0)) - 1.0) > 1e-12:
        raise ValidationError("v0 must be a unit vector")
    if spacing is None:
        d, _ = sp.kdtree().query(sp.coords, k=2)
        spacing = float(np.median(d[:, 1]))
    length = S_max - 3.0
    if length <= 0:
        coords, w, n_ray = sp.coords, curve_measure.weights, 0
    else:
        n_int = max(1, int(np.ceil(length / spacing)))
        s = 3.0 + length * np.arange(n_int + 1) / n_int
        s[-1] = S_max
        wr = np.full(n_int + 1, length / n_int)
        wr[0] = wr[-1] = length / (2 * n_int)
        coords = np.vstack([sp.coords, s[:, None] * v0[None, :]])
        w = np.concatenate([curve_measure.weights, wr])
        n_ray = n_int + 1
    mu = DiscreteMeasure(FiniteMetricSpace(coords=coords, norm=sp.norm), w)
    if reg_scales is None:
        ext = np.max(sp.norm.norm(coords))
        reg_scales = (4 * spacing, 2 * ext)
    reg = regularity_constants(mu, reg_scales, n=1).reg
    return mu, float(reg), n_ray


# ---------------------------------------------------------------- generators

def _grid(a: float, b: float, K: int) -> np.ndarray:
    if K < 2:
        raise ValidationError("need K >= 2 intervals")
    t = a + (b - a) * np.arange(K + 1) / K
    t[-1] = b
    return t


def line(direction=(1.0, 0.0), K: int = 64, t0: float = 0.0, t1: float = 1.0,
         space: NormedSpace | None = None) -> SampledCurve:
    v = np.asarray(direction, dtype=float)
    space = space or NormedSpace.euclidean(v.size)
    t = _grid(t0, t1, K)
    return SampledCurve(t, t[:, None] * v, np.tile(v, (t.size, 1)), space, analytic=True, name="line")


def segment(start, end, K: int = 64, space: NormedSpace | None = None) -> SampledCurve:
    p, q = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    space = space or NormedSpace.euclidean(p.size)
    t = _grid(0.0, 1.0, K)
    return SampledCurve(t, p + t[:, None] * (q - p), np.tile(q - p, (t.size, 1)), space,
                        analytic=True, name="segment")


def circle(K: int = 512, radius: float = 1.0, space: NormedSpace | None = None) -> SampledCurve:
    """Closed circle ``radius (cos t, sin t)``, t in [0, 2 pi]; the last sample repeats the first."""
    space = space or NormedSpace.euclidean(2)
    t = _grid(0.0, 2 * np.pi, K)
    c, s = np.cos(t), np.sin(t)
    c[-1], s[-1] = c[0], s[0]
    x = radius * np.column_stack([c, s])
    d = radius * np.column_stack([-s, c])
    return SampledCurve(t, x, d, space, closed=True, analytic=True, name="circle")


def helix(K: int = 512, turns: float = 1.0, pitch: float = 0.5, space: NormedSpace | None = None) -> SampledCurve:
    space = space or NormedSpace.euclidean(3)
    t = _grid(0.0, 2 * np.pi * turns, K)
    h = pitch / (2 * np.pi)
    x = np.column_stack([np.cos(t), np.sin(t), h * t])
    d = np.column_stack([-np.sin(t), np.cos(t), np.full_like(t, h)])
    return SampledCurve(t, x, d, space, analytic=True, name="helix")


def graph(K: int = 512, eps: float = 0.1, seed: int = 0, modes: int = 4,
          space: NormedSpace | None = None) -> SampledCurve:
    """Perturbed graph ``t -> (t, eps w(t))`` on [0, 1] with a seeded trigonometric ``w``.

    ``w(t) = sum_k a_k sin(2 pi k t + phi_k) / k^2`` with standard normal
    amplitudes, so ``w'`` is bounded and smooth.
    """
    space = space or NormedSpace.euclidean(2)
    gen = rng(seed, 0x6A)
    amp = gen.standard_normal(modes)
    phase = gen.uniform(0, 2 * np.pi, modes)
    k = np.arange(1, modes + 1)
    t = _grid(0.0, 1.0, K)
    arg = 2 * np.pi * k[None, :] * t[:, None] + phase[None, :]
    w = np.sum(amp / k ** 2 * np.sin(arg), axis=1)
    dw = np.sum(amp * 2 * np.pi / k * np.cos(arg), axis=1)
    return SampledCurve(t, np.column_stack([t, eps * w]), np.column_stack([np.ones_like(t), eps * dw]),
                        space, analytic=True, name="graph")


def holder_graph(K: int = 512, alpha: float = 0.5, space: NormedSpace | None = None) -> SampledCurve:
    """``t -> (t, |t|^(1+alpha) / (1+alpha))`` on [-1, 1]; derivative ``(1, sign(t)|t|^alpha)``."""
    space = space or NormedSpace.euclidean(2)
    t = _grid(-1.0, 1.0, K)
    y = np.abs(t) ** (1 + alpha) / (1 + alpha)
    dy = np.sign(t) * np.abs(t) ** alpha
    return SampledCurve(t, np.column_stack([t, y]), np.column_stack([np.ones_like(t), dy]),
                        space, analytic=True, name="holder_graph")


def figure_eight(K: int = 512, space: NormedSpace | None = None) -> SampledCurve:
    """Lemniscate-like ``(sin t, sin t cos t)`` on [0, 2 pi): crosses itself at the origin.

    The grid has K samples ``2 pi j / K``; for even K it hits t = pi, where
    the curve returns to its starting point.
    """
    space = space or NormedSpace.euclidean(2)
    if K < 3:
        raise ValidationError("need K >= 3 samples")
    t = 2 * np.pi * np.arange(K) / K
    x = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])
    d = np.column_stack([np.cos(t), np.cos(2 * t)])
    return SampledCurve(t, x, d, space, analytic=True, name="figure_eight")


GENERATORS = {"line": line, "segment": segment, "circle": circle, "helix": helix, "graph": graph,
              "holder_graph": holder_graph, "figure_eight": figure_eight}


def make_curve(name: str, **kwargs) -> SampledCurve:
    """Build a named test curve. ``norm`` may be given as a JSON-style dict."""
    if name not in GENERATORS:
        raise ValidationError(f"unknown curve {name!r}; choose from {sorted(GENERATORS)}")
    norm = kwargs.pop("norm", None)
    dim = {"helix": 3}.get(name, 2)
    if name == "line" and "direction" in kwargs:
        dim = len(kwargs["direction"])
    if name == "segment" and "start" in kwargs:
        dim = len(kwargs["start"])
    if norm is not None:
        kwargs["space"] = NormedSpace.from_json(norm, dim)
    return GENERATORS[name](**kwargs)


def load_curve(path) -> SampledCurve:
    with open(path, encoding="utf-8") as fh:
        return SampledCurve.from_json(json.load(fh))
