"""Convolution kernels with certified size and smoothness constants.

A :class:`Kernel` wraps ``x -> K(x)`` on ``R^N minus 0`` and carries the
homogeneity dimension ``n``, the Hölder exponent ``beta`` and a constant
``B`` meant to satisfy

    |K(x)| <= B / ||x||^n,
    |K(x) - K(x + h)| <= B ||h||^beta / ||x||^(n + beta)   for ||h|| <= ||x|| / 2.

The two-point form ``K(x, y) = K(x - y)`` is available through
:meth:`Kernel.two_point` and :meth:`Kernel.matrix`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from ._util import PowerIterationResult, ValidationError, power_iteration, rng
from .expr import compile_expression
from .space import NormedSpace

PROBE_SCALES = 4
PROBE_DIRECTIONS = 64
PROBE_OFFSETS = 8
CERTIFY_MARGIN = 1.05
POLISH_STARTS = 4
# polished Hölder pairs keep ||h|| >= ||x||/16: shorter steps only measure cancellation error
POLISH_MIN_FRACTION = 1.0 / 8


@dataclass(frozen=True)
class Kernel:
    func: object = field(repr=False)
    space: NormedSpace
    beta: float = 1.0
    B: float = np.inf
    n: int = 1
    name: str = "kernel"
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def two_point(self, x, y) -> np.ndarray:
        return self(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def matrix(self, X, Y=None) -> np.ndarray:
        """``K(x_i - y_j)`` with the diagonal (``x_i = y_j``) set to 0."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        diff = X[:, None, :] - Y[None, :, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self(diff)
        out[~np.any(diff != 0, axis=-1)] = 0.0
        return out

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"

    def with_constant(self, B: float) -> "Kernel":
        return Kernel(self.func, self.space, self.beta, float(B), self.n, self.name, dict(self.params))

    def to_json(self) -> dict:
        return {"name": self.name, "params": self.params, "beta": self.beta, "B": self.B, "n": self.n,
                "norm": self.space.to_json(), "dimension": self.space.dimension}


# ---------------------------------------------------------------- probes

def _unit_directions(space: NormedSpace, count: int, gen) -> np.ndarray:
    if space.dimension == 1:
        return np.where(gen.random(count) < 0.5, -1.0, 1.0)[:, None]
    v = gen.standard_normal((count, space.dimension))
    return v / space.norm(v)[:, None]


def probe_points(space: NormedSpace, seed: int = 0, directions: int = PROBE_DIRECTIONS,
                 offsets: int = PROBE_OFFSETS, scales: int = PROBE_SCALES) -> np.ndarray:
    """Growth probes: ``2^k (1 + j / offsets) u`` for k in 0..scales-1 (shifted to straddle 1) and random unit u."""
    gen = rng(seed, 0x9A0BE)
    u = _unit_directions(space, directions, gen)
    radii = np.array([2.0 ** (k - scales // 2) * (1 + j / offsets) for k in range(scales) for j in range(offsets)])
    return (radii[:, None, None] * u[None, :, :]).reshape(-1, space.dimension)


def holder_pairs(space: NormedSpace, seed: int = 0, directions: int = PROBE_DIRECTIONS,
                 offsets: int = PROBE_OFFSETS, scales: int = PROBE_SCALES):
    """Pairs (x, h) with ``||h|| <= ||x|| / 2`` enforced on the computed norms.

    ``||h|| = (j + 1) / offsets * ||x|| / 2`` with an independent random
    direction for h.
    """
    gen = rng(seed, 0x401D)
    x = probe_points(space, seed, directions, offsets, scales)
    hdir = _unit_directions(space, x.shape[0], gen)
    frac = (np.arange(x.shape[0]) % offsets + 1) / offsets
    # decorrelate the length fraction from the radius offset
    frac = frac[gen.permutation(frac.size)]
    nx = space.norm(x)
    h = hdir * (frac * nx / 2)[:, None]
    for _ in range(8):
        over = space.norm(h) > space.norm(x) / 2
        if not over.any():
            break
        h[over] *= 1 - 1e-15
    if np.any(space.norm(h) > space.norm(x) / 2):
        raise ValidationError("could not enforce ||h|| <= ||x||/2 on the probe set")
    return x, h


@dataclass(frozen=True)
class ConstantFit:
    value: float
    declared: float
    passed: bool
    probes: int
    skipped: int = 0

    def to_json(self) -> dict:
        return {"fitted": self.value, "declared": self.declared, "passed": self.passed,
                "probes": self.probes, "skipped": self.skipped}


def _unit(space: NormedSpace, v: np.ndarray):
    nv = float(space.norm(v))
    return None if nv == 0 or not np.isfinite(nv) else v / nv


def _polish(objective, starts, dim: int) -> float:
    best = 0.0
    for z0 in starts:
        res = minimize(lambda z: -objective(z), z0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 200 * dim})
        val = objective(res.x)
        if np.isfinite(val):
            best = max(best, val)
    return best


def verify_growth(K: Kernel, probe=None, seed: int = 0, polish: bool = True) -> ConstantFit:
    """Fit ``B_g = max ||x||^n |K(x)|`` over the probes and compare with the declared B.

    With ``polish`` the 4 best probes are refined by a Nelder-Mead search
    over the direction of x at fixed radius; the result stays a lower
    bound for the true supremum.
    """
    x = probe_points(K.space, seed) if probe is None else np.atleast_2d(np.asarray(probe, dtype=float))
    nx = K.space.norm(x)
    if np.any(nx == 0):
        raise ValidationError("growth probes must be nonzero")
    vals = K(x)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValidationError(f"kernel not finite at probe {i}: x={x[i].tolist()}")
    score = nx ** K.n * np.abs(vals)
    B_g = float(np.max(score))
    if polish and K.space.dimension > 1 and B_g > 0:
        top = np.argsort(score)[::-1][:POLISH_STARTS]

        def objective(z, r=1.0):
            u = _unit(K.space, z)
            if u is None:
                return 0.0
            return float(r ** K.n * abs(K(r * u[None, :])[0]))

        B_g = max(B_g, _polish(objective, [x[i] / nx[i] for i in top], K.space.dimension))
    return ConstantFit(B_g, K.B, bool(B_g <= K.B * (1 + 1e-12)), x.shape[0])


def verify_holder(K: Kernel, pair_probe=None, seed: int = 0, polish: bool = True) -> ConstantFit:
    """Fit ``B_h = max |K(x) - K(x+h)| ||x||^(n+beta) / ||h||^beta``; pairs with h = 0 are skipped.

    With ``polish`` the 4 best pairs are refined by Nelder-Mead over the
    directions of x and h and the ratio ``||h|| / ||x||`` in [1/16, 1/2].
    """
    if pair_probe is None:
        x, h = holder_pairs(K.space, seed)
    else:
        x, h = (np.atleast_2d(np.asarray(a, dtype=float)) for a in pair_probe)
    nx, nh = K.space.norm(x), K.space.norm(h)
    if np.any(nh > nx / 2):
        raise ValidationError("holder probes must satisfy ||h|| <= ||x||/2")
    keep = nh > 0
    skipped = int(np.sum(~keep))
    x, h, nx, nh = x[keep], h[keep], nx[keep], nh[keep]
    d = np.abs(K(x) - K(x + h))
    if not np.all(np.isfinite(d)):
        i = int(np.argmax(~np.isfinite(d)))
        raise ValidationError(f"kernel not finite at pair {i}: x={x[i].tolist()}, h={h[i].tolist()}")
    score = d * nx ** (K.n + K.beta) / nh ** K.beta
    B_h = float(np.max(score)) if d.size else 0.0
    if polish and B_h > 0:
        N = K.space.dimension
        lo = POLISH_MIN_FRACTION

        def objective(z):
            u, v = _unit(K.space, z[:N]), _unit(K.space, z[N:2 * N])
            if u is None or v is None:
                return 0.0
            frac = 0.5 * (lo + (1 - lo) / (1 + np.exp(-np.clip(z[-1], -50, 50))))
            hh = frac * v
            if float(K.space.norm(hh)) > 0.5:
                return 0.0
            diff = abs(float(K(u[None, :])[0] - K((u + hh)[None, :])[0]))
            return diff / float(K.space.norm(hh)) ** K.beta

        starts = []
        for i in np.argsort(score)[::-1][:POLISH_STARTS]:
            frac = min(max(2 * nh[i] / nx[i], lo + 1e-6), 1 - 1e-6)
            c = np.log((frac - lo) / (1 - frac))
            starts.append(np.concatenate([x[i] / nx[i], h[i] / nh[i], [c]]))
        B_h = max(B_h, _polish(objective, starts, 2 * N + 1))
    return ConstantFit(B_h, K.B, bool(B_h <= K.B * (1 + 1e-12)), int(x.shape[0]), skipped)


def certify(K: Kernel, seed: int = 0) -> Kernel:
    """Return K with B set to 1.05 times the larger of the two fitted constants."""
    g = verify_growth(K.with_constant(np.inf), seed=seed).value
    h = verify_holder(K.with_constant(np.inf), seed=seed).value
    return K.with_constant(CERTIFY_MARGIN * max(g, h))


def homogeneity_defect(K: Kernel, rs=(0.5, 2.0, 10.0), seed: int = 0) -> float:
    """max over probes and r of ``|K(rx) - K(x)/r| / (|K(x)| max(1, 1/r))``; zero-valued probes compare absolutely."""
    x = probe_points(K.space, seed)
    kx = K(x)
    worst = 0.0
    for r in rs:
        diff = np.abs(K(r * x) - kx / r)
        scale = np.where(kx != 0, np.abs(kx), 1.0) * max(1.0, 1.0 / r)
        worst = max(worst, float(np.max(diff / scale)))
    return worst


# ---------------------------------------------------------------- kernel families

def riesz_kernel(coord: int, space: NormedSpace, certify_constant: bool = True) -> Kernel:
    """``R(x) = x_coord / ||x||^2`` (1-based coordinate); needs a p-norm, 1 < p < inf."""
    if space.kind == "sup":
        raise ValidationError("norm not C1: Riesz kernels need a p-norm with 1 < p < inf")
    if not 1 <= coord <= space.dimension:
        raise ValidationError(f"coordinate {coord} outside 1..{space.dimension}")
    k = coord - 1

    def func(x):
        nx = space.norm(x)
        return x[..., k] / (nx * nx)

    K = Kernel(func, space, 1.0, np.inf, 1, "riesz", {"coord": coord, "p": space.p})
    return certify(K) if certify_constant else K


def dual_riesz_kernel(y, space: NormedSpace, certify_constant: bool = True) -> Kernel:
    """``R*(x) = <x, y> / ||x||^2`` for y of unit dual (conjugate-exponent) norm."""
    y = np.asarray(y, dtype=float)
    if y.shape != (space.dimension,):
        raise ValidationError("y must have the space's dimension")
    if abs(float(space.dual_norm(y)) - 1.0) > 1e-12:
        raise ValidationError("y must have unit dual norm")

    def func(x):
        nx = space.norm(x)
        return (x @ y) / (nx * nx)

    K = Kernel(func, space, 1.0, np.inf, 1, "dual_riesz", {"y": y.tolist(), "p": space.exponent})
    return certify(K) if certify_constant else K


def hilbert_kernel() -> Kernel:
    """``K(x) = 1/x`` on the real line; B = 2 is the exact Hölder constant bound."""
    return Kernel(lambda x: 1.0 / x[..., 0], NormedSpace.euclidean(1), 1.0, 2.0, 1, "hilbert", {})


def zero_kernel(space: NormedSpace) -> Kernel:
    return Kernel(lambda x: np.zeros(np.shape(x)[:-1]), space, 1.0, 0.0, 1, "zero", {})


def inverse_norm_kernel(space: NormedSpace) -> Kernel:
    """``K(x) = 1 / ||x||``; even, so its line integrals do not cancel."""
    return Kernel(lambda x: 1.0 / space.norm(x), space, 1.0, 2.0, 1, "inverse_norm", {})


def expression_kernel(text: str, space: NormedSpace, beta: float = 1.0, B: float | None = None) -> Kernel:
    f = compile_expression(text, space.dimension, space.norm)
    K = Kernel(f, space, float(beta), np.inf, 1, "expr", {"expr": text})
    return certify(K) if B is None else K.with_constant(B)


def kernel_from_config(cfg: dict) -> Kernel:
    """Build a kernel from a config dict such as ``{"kind": "riesz", "coord": 1, "p": 2}``.

    Keys: ``kind`` in {riesz, dual_riesz, hilbert, zero, inverse_norm, expr};
    ``dimension`` (default 2, or len(y)); ``p`` (default 2, "inf" for
    the sup-norm); ``coord``; ``y``; ``expr``; ``beta``; ``B``.
    """
    kind = cfg.get("kind")
    p = cfg.get("p", 2)
    if kind == "hilbert":
        return hilbert_kernel()
    dim = int(cfg.get("dimension", len(cfg["y"]) if "y" in cfg else 2))
    space = NormedSpace.sup(dim) if p in ("inf", "sup", np.inf) else NormedSpace(dim, "p", float(p))
    if kind == "riesz":
        return riesz_kernel(int(cfg.get("coord", 1)), space)
    if kind == "dual_riesz":
        return dual_riesz_kernel(cfg["y"], space)
    if kind == "zero":
        return zero_kernel(space)
    if kind == "inverse_norm":
        return inverse_norm_kernel(space)
    if kind == "expr":
        return expression_kernel(cfg["expr"], space, cfg.get("beta", 1.0), cfg.get("B"))
    raise ValidationError(f"unknown kernel kind {kind!r}")


# ---------------------------------------------------------------- bump and annular integrals

@dataclass(frozen=True)
class BumpProfile:
    """Radial profile equal to 1 below 1/2 and 0 above 2.

    In between it is ``1 - S(u)`` with ``u = (log2 s + 1) / 2`` and the
    quintic smoothstep ``S(u) = 6u^5 - 15u^4 + 10u^3``.
    """

    inner: float = 0.5
    outer: float = 2.0

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            u = (np.log2(np.maximum(s, 1e-300)) - np.log2(self.inner)) / (np.log2(self.outer) - np.log2(self.inner))
        u = np.clip(u, 0.0, 1.0)
        return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))

    def scaled(self, r: float, s) -> np.ndarray:
        """``psi_r`` at radius s: ``psi(r s)``."""
        return self(r * np.asarray(s, dtype=float))


PSI = BumpProfile()


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    panels: int
    nodes: int


def _level_crossings(fn, s_star: float, f_star: float, level: float, S: float) -> list[float]:
    """Parameters s in [-S, S] where the convex function fn crosses ``level``."""
    if level <= f_star:
        return []
    out = []
    for end in (-S, S):
        if fn(end) > level:
            out.append(brentq(lambda s: fn(s) - level, min(s_star, end), max(s_star, end), xtol=1e-15, rtol=1e-15))
    return out


def _romberg_panel(g, a: float, b: float, n0: int, tol: float, max_level: int = 12):
    n = n0
    s = np.linspace(a, b, n + 1)
    y = g(s)
    T_prev = (b - a) / n * (np.sum(y) - 0.5 * (y[0] + y[-1]))
    R_prev = None
    for _ in range(max_level):
        n *= 2
        mid = a + (b - a) * (np.arange(1, n, 2) / n)
        T = 0.5 * T_prev + (b - a) / n * np.sum(g(mid))
        R = T + (T - T_prev) / 3.0
        if R_prev is not None:
            err = abs(R - R_prev)
            if err <= tol:
                return R, err, n + 1
        R_prev, T_prev = R, T
    return R_prev, abs(R_prev - T_prev), n + 1


def annular_integral(K: Kernel, q, u, r: float, R: float, tol: float = 1e-12, nodes_per_panel: int = 64) -> QuadratureResult:
    """Integral of ``(psi_R(y) - psi_r(y)) K(y)`` over the line ``y = q + s u``, ``||u|| = 1``.

    The integrand vanishes unless ``1/(2R) <= ||y|| <= 2/r``, and
    ``||q + s u|| >= |s| - ||q||`` confines it to ``|s| <= ||q|| + 2/r``.
    Panels break where ``||y||`` crosses the profile breakpoints and every
    power of two in between; each panel gets a trapezoid rule starting at
    64 intervals, refined by doubling with Richardson extrapolation until
    successive estimates agree to ``tol``.
    """
    if not (0 < r < R):
        raise ValidationError("need 0 < r < R")
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    sp = K.space
    if abs(float(sp.norm(u)) - 1.0) > 1e-12:
        raise ValidationError("line direction must be a unit vector")
    if K.is_zero:
        return QuadratureResult(0.0, 0.0, 0, 0)
    nq = float(sp.norm(q))
    S = nq + 2.0 / r

    def radius(s):
        return sp.norm(q + np.asarray(s, dtype=float)[..., None] * u)

    if sp.kind == "p" and sp.p == 2.0:
        s_star = float(-np.dot(q, u))
    else:
        s_star = float(minimize_scalar(lambda s: float(radius(s)), bounds=(-nq - 1, nq + 1), method="bounded",
                                       options={"xatol": 1e-14}).x)
    f_star = float(radius(s_star))
    levels = {0.5 / R, 2.0 / R, 0.5 / r, 2.0 / r}
    k_lo, k_hi = int(np.floor(np.log2(0.5 / R))), int(np.ceil(np.log2(2.0 / r)))
    levels.update(2.0 ** k for k in range(k_lo, k_hi + 1) if 0.5 / R < 2.0 ** k < 2.0 / r)
    breaks = {-S, S, s_star}
    for lev in levels:
        breaks.update(_level_crossings(lambda s: float(radius(s)), s_star, f_star, lev, S))
    breaks = np.array(sorted(b for b in breaks if -S <= b <= S))

    def g(s):
        rad = radius(s)
        w = PSI.scaled(R, rad) - PSI.scaled(r, rad)
        out = np.zeros_like(rad)
        live = w != 0
        if live.any():
            pts = q + np.asarray(s)[live][:, None] * u
            out[live] = w[live] * K(pts)
        return out

    total, err, nodes = 0.0, 0.0, 0
    panels = 0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        rm = float(radius(mid))
        if rm >= 2.0 / r or rm <= 0.5 / R:
            # whole panel outside the annulus: the profile difference is zero there
            if float(radius(a)) >= 2.0 / r and float(radius(b)) >= 2.0 / r:
                continue
        v, e, n = _romberg_panel(g, a, b, nodes_per_panel, tol)
        total += v
        err += e
        nodes += n
        panels += 1
    return QuadratureResult(float(total), float(err), panels, nodes)


def line_family(space: NormedSpace, seed: int = 0, random_lines: int = 4):
    """Test lines: through the origin, offset by 1 perpendicular-ish, and seeded random offsets."""
    N = space.dimension
    if N == 1:
        return [(np.zeros(1), np.ones(1))]
    e1 = np.zeros(N)
    e1[0] = 1.0
    e2 = np.zeros(N)
    e2[1] = 1.0
    lines = [(np.zeros(N), e1), (e2.copy(), e1)]
    gen = rng(seed, 0x11E)
    for _ in range(random_lines):
        u = gen.standard_normal(N)
        u /= space.norm(u)
        q = gen.uniform(-2, 2, N)
        lines.append((q, u))
    return lines


# ---------------------------------------------------------------- L2 bounds on lines

@dataclass(frozen=True)
class UBLReport:
    norms: dict
    max_norm: float
    iterations: dict

    def to_json(self) -> dict:
        return {"norms": {repr(k): v for k, v in self.norms.items()}, "max_norm": self.max_norm,
                "iterations": {repr(k): v for k, v in self.iterations.items()}}


def segment_operator_norm(K: Kernel, q, u, L: float, n_nodes: int, eps: float, tol: float = 1e-8,
                          seed: int = 0) -> PowerIterationResult:
    """L2(w) norm of the eps-truncated operator on the segment ``q + s u``, s in [0, L].

    Midpoint nodes with equal weights ``w = L / n``; the norm is the top
    singular value of ``W^{1/2} A W^{-1/2}`` with ``A_ij = 1{|s_i - s_j| > eps} K(x_i - x_j) w_j``.
    """
    if n_nodes < 64:
        raise ValidationError("need at least 64 nodes")
    s = (np.arange(n_nodes) + 0.5) * (L / n_nodes)
    x = np.asarray(q, dtype=float) + s[:, None] * np.asarray(u, dtype=float)
    w = np.full(n_nodes, L / n_nodes)
    A = K.matrix(x)
    dist = K.space.distances(x)
    A[dist <= eps] = 0.0
    sw = np.sqrt(w)
    Bm = sw[:, None] * A * sw[None, :]
    if not np.any(Bm):
        return PowerIterationResult(0.0, 0, True, np.zeros(n_nodes))
    res = power_iteration(lambda v: Bm @ v, lambda v: Bm.T @ v, n_nodes, tol=tol, seed=seed)
    if not res.converged:
        raise ValidationError(f"power iteration did not converge in {res.iterations} steps")
    return res


def ubl_estimate(K: Kernel, line, L: float, n_nodes: int, eps_grid, tol: float = 1e-8) -> UBLReport:
    q, u = line
    norms, its = {}, {}
    for eps in eps_grid:
        res = segment_operator_norm(K, q, u, L, n_nodes, float(eps), tol)
        norms[float(eps)] = res.value
        its[float(eps)] = res.iterations
    return UBLReport(norms, max(norms.values()), its)


def ubl_stability(K: Kernel, line, L: float, n_nodes: int, eps_grid, tol: float = 1e-8) -> dict:
    """Relative changes of the segment norms for L -> 2L (same node density) and n -> 2n (same L)."""
    base = ubl_estimate(K, line, L, n_nodes, eps_grid, tol)
    longer = ubl_estimate(K, line, 2 * L, 2 * n_nodes, eps_grid, tol)
    finer = ubl_estimate(K, line, L, 2 * n_nodes, eps_grid, tol)
    rows = []
    for eps in base.norms:
        b = base.norms[eps]
        rel = (lambda v: abs(v - b) / b if b > 0 else abs(v))
        rows.append({"eps": eps, "norm": b, "norm_2L": longer.norms[eps], "norm_2N": finer.norms[eps],
                     "change_L": rel(longer.norms[eps]), "change_N": rel(finer.norms[eps])})
    return {"rows": rows, "max_norm": max(base.max_norm, longer.max_norm, finer.max_norm),
            "max_change_L": max(r["change_L"] for r in rows), "max_change_N": max(r["change_N"] for r in rows)}


def annular_sweep(K: Kernel, lines, radii) -> float:
    """max |annular integral| over the lines and all pairs r < R from ``radii``."""
    radii = sorted(radii)
    best = 0.0
    for q, u in lines:
        for i, r in enumerate(radii):
            for R in radii[i + 1:]:
                best = max(best, abs(annular_integral(K, q, u, r, R).value))
    return best
