"""Truncated and maximal singular integrals against discrete measures.

Everything is a finite sum. For a support point x the map
``eps -> T_eps f(x)`` is piecewise constant and only jumps at the
distances d(x, y), so the maximal operator is an exact maximum over
distance shells. Truncated values are read off the same cumulative sums,
which makes ``|T_eps f(x)| <= T_* f(x)`` hold bit for bit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ._util import Estimate, ValidationError, log_radius_grid, ordered_map, power_iteration, rng
from .kernel import Kernel
from .space import DiscreteMeasure, measure_doubling_constant, upper_regularity_exact

SHELL_EXACT_LIMIT = 2048
CACHE_LIMIT = 4096
BLOCK = 256
ROUNDING_SLACK = 1e-12


class SingularIntegral:
    """``T_{mu, eps}`` and ``T_{mu, *}`` for a convolution kernel and a discrete measure.

    Values are computed at every point of ``mu.space`` (zero-weight points
    included). Distance and kernel tables with their shell orderings are
    cached for spaces up to 4096 points.
    """

    def __init__(self, K: Kernel, mu: DiscreteMeasure):
        if mu.space.coords is None:
            raise ValidationError("singular integrals need a coordinate space")
        if mu.space.norm.dimension != K.space.dimension:
            raise ValidationError("kernel and measure live in different dimensions")
        self.K = K
        self.mu = mu
        self.X = mu.space.coords
        self.w = mu.weights
        self.n = len(mu)
        self._cache = None

    # -- per-block tables
    def _compute_block(self, rows: np.ndarray):
        X = self.X
        d = self.K.space.distances(X[rows], X)
        if self.K.is_zero:
            k = np.zeros_like(d)
        else:
            k = self.K.matrix(X[rows], X)
        order = np.argsort(-d, axis=1, kind="stable")
        ds = np.take_along_axis(d, order, axis=1)
        kw = np.take_along_axis(k * self.w[None, :], order, axis=1)
        return d, ds, kw, order

    def _blocks(self, idx):
        idx = np.arange(self.n) if idx is None else np.atleast_1d(np.asarray(idx))
        return [idx[i:i + BLOCK] for i in range(0, idx.size, BLOCK)]

    def _tables(self, rows):
        if self.n <= CACHE_LIMIT:
            if self._cache is None:
                parts = ordered_map(self._compute_block, [np.arange(i, min(i + BLOCK, self.n))
                                                          for i in range(0, self.n, BLOCK)])
                self._cache = tuple(np.vstack([p[j] for p in parts]) for j in range(4))
            d, ds, kw, order = self._cache
            return d[rows], ds[rows], kw[rows], order[rows]
        return self._compute_block(rows)

    def _partial_sums(self, f, rows):
        """Descending-distance partial sums ``S[:, j]`` and the sorted distances."""
        _, ds, kw, order = self._tables(rows)
        fv = np.take(np.asarray(f, dtype=float), order)
        return np.cumsum(kw * fv, axis=1), ds

    # -- public evaluations
    def truncated(self, f, eps, idx=None) -> np.ndarray:
        """``T_eps f`` at the points ``idx`` (all points by default)."""
        if not eps > 0:
            raise ValidationError("eps must be positive")
        f = self._check_f(f)

        def block(rows):
            S, ds = self._partial_sums(f, rows)
            cnt = np.sum(ds > eps, axis=1)
            return np.where(cnt > 0, S[np.arange(rows.size), np.maximum(cnt - 1, 0)], 0.0)

        return np.concatenate(ordered_map(block, self._blocks(idx)))

    def truncated_grid(self, f, eps_grid, idx=None) -> np.ndarray:
        """``T_eps f`` for every eps in the grid: shape (points, len(eps_grid))."""
        eps_grid = np.asarray(eps_grid, dtype=float)
        if eps_grid.size == 0 or np.any(eps_grid <= 0):
            raise ValidationError("eps grid must be nonempty and positive")
        f = self._check_f(f)

        def block(rows):
            S, ds = self._partial_sums(f, rows)
            # ds is descending; count of entries > eps
            cnt = np.stack([np.sum(ds > e, axis=1) for e in eps_grid], axis=1)
            r = np.arange(rows.size)[:, None]
            return np.where(cnt > 0, S[r, np.maximum(cnt - 1, 0)], 0.0)

        return np.vstack(ordered_map(block, self._blocks(idx)))

    def maximal(self, f, idx=None) -> np.ndarray:
        """Exact ``T_* f = sup_{eps > 0} |T_eps f|`` via distance shells."""
        f = self._check_f(f)

        def block(rows):
            S, ds = self._partial_sums(f, rows)
            nxt = np.concatenate([ds[:, 1:], np.full((rows.size, 1), -1.0)], axis=1)
            valid = (ds > 0) & (ds != nxt)
            return np.max(np.where(valid, np.abs(S), 0.0), axis=1)

        return np.concatenate(ordered_map(block, self._blocks(idx)))

    def maximal_on_grid(self, f, eps_grid, idx=None) -> np.ndarray:
        return np.max(np.abs(self.truncated_grid(f, eps_grid, idx)), axis=1)

    def shell_grid(self, i: int) -> np.ndarray:
        """One eps per distance shell around point i: every distinct positive distance and half the smallest."""
        d = self.K.space.distances(self.X[i:i + 1], self.X)[0]
        pos = np.unique(d[(d > 0) & (self.w > 0)])
        if pos.size == 0:
            return np.array([1.0])
        return np.concatenate([[pos[0] / 2], pos])

    def _check_f(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n,):
            raise ValidationError(f"f must have one value per point ({self.n})")
        return f


def truncated_sio(K: Kernel, mu: DiscreteMeasure, f, eps: float, x) -> float:
    """``sum_{d(x, y) > eps} K(x - y) f(y) w(y)`` for an arbitrary point x (index or coordinates)."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    X = mu.space.coords
    xc = X[int(x)] if isinstance(x, (int, np.integer)) else np.asarray(x, dtype=float)
    d = K.space.distances(xc[None, :], X)[0]
    sel = d > eps
    if not sel.any():
        return 0.0
    return float(np.sum(K(xc[None, :] - X[sel]) * np.asarray(f, dtype=float)[sel] * mu.weights[sel]))


def maximal_sio(K: Kernel, mu: DiscreteMeasure, f, x: int, eps_grid=None,
                op: SingularIntegral | None = None) -> Estimate:
    """sup over an eps grid of ``|T_eps f(x)|``.

    Without a grid: the shell grid (exact) for supports of at most 2048
    points, otherwise a 64-per-octave log grid from half the smallest
    distance to the diameter, flagged inexact.
    """
    op = op or SingularIntegral(K, mu)
    if eps_grid is not None:
        grid = np.asarray(eps_grid, dtype=float)
        if grid.size == 0:
            raise ValidationError("empty eps grid")
        return Estimate(float(op.maximal_on_grid(f, grid, [x])[0]), False, "user grid")
    if mu.support.size <= SHELL_EXACT_LIMIT:
        return Estimate(float(op.maximal_on_grid(f, op.shell_grid(x), [x])[0]), True, "distance shells")
    d = K.space.distances(mu.space.coords[x:x + 1], mu.space.coords)[0]
    pos = d[d > 0]
    grid = log_radius_grid(pos.min() / 2, pos.max(), 64)
    return Estimate(float(op.maximal_on_grid(f, grid, [x])[0]), False, "64 per octave log grid")


# ---------------------------------------------------------------- maximal function

def maximal_function_all(mu: DiscreteMeasure, f, idx=None) -> np.ndarray:
    """Exact ``M_mu f(x) = sup_r (1/mu(B(x,r))) int_{B(x,r)} |f| dmu`` at the points idx.

    Open-ball averages change only just above a distance value, so the
    maximum runs over closed shells ``{d <= d_k}``; shells of zero mass are skipped.
    """
    f = np.abs(np.asarray(f, dtype=float))
    w = mu.weights
    sp = mu.space
    idx = mu.support if idx is None else np.atleast_1d(np.asarray(idx))
    fw = f * w

    def block(rows):
        if sp.coords is not None:
            d = sp.norm.distances(sp.coords[rows], sp.coords)
        else:
            d = np.asarray(sp.dist)[rows]
        order = np.argsort(d, axis=1, kind="stable")
        ds = np.take_along_axis(d, order, axis=1)
        cf = np.cumsum(np.take(fw, order), axis=1)
        cw = np.cumsum(np.take(w, order), axis=1)
        nxt = np.concatenate([ds[:, 1:], np.full((rows.size, 1), np.inf)], axis=1)
        end = (ds != nxt) & (cw > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(end, cf / np.where(cw > 0, cw, 1.0), 0.0)
        return ratio.max(axis=1)

    blocks = [idx[i:i + BLOCK] for i in range(0, idx.size, BLOCK)]
    return np.concatenate(ordered_map(block, blocks)) if blocks else np.zeros(0)


def maximal_function(mu: DiscreteMeasure, f, x: int) -> float:
    if mu.weights[x] <= 0:
        raise ValidationError("x must lie in the support of the measure")
    return float(maximal_function_all(mu, f, [x])[0])


# ---------------------------------------------------------------- weak type and norms

def weak11_constant(values, mu: DiscreteMeasure, f, mask=None) -> float:
    """Smallest C with ``mu{x in mask : values > lam} <= C ||f||_1 / lam`` for all lam > 0.

    The supremum over lam is approached from the left of each distinct
    positive value v, where it equals ``v mu{values >= v}``.
    """
    values = np.asarray(values, dtype=float)
    w = mu.weights if mask is None else np.where(mask, mu.weights, 0.0)
    norm1 = float(np.sum(np.abs(np.asarray(f, dtype=float)) * mu.weights))
    if norm1 <= 0:
        raise ValidationError("f must have positive L1 norm")
    pos = (values > 0) & (w > 0)
    if not pos.any():
        return 0.0
    v, ww = values[pos], w[pos]
    order = np.argsort(-v, kind="stable")
    v, ww = v[order], ww[order]
    cum = np.cumsum(ww)
    last = np.r_[v[1:] != v[:-1], True]
    return float(np.max(v[last] * cum[last]) / norm1)


def vitali_weak_bound(mu: DiscreteMeasure) -> float:
    """Weak (1,1) bound ``D^2`` for the centered maximal operator, D the exact measure doubling constant."""
    D = measure_doubling_constant(mu)
    return D * D


@dataclass(frozen=True)
class LpNormEstimate:
    value: float
    certified: bool
    ensemble_max: float
    iterations: int = 0
    note: str = ""

    def to_json(self) -> dict:
        return {"value": self.value, "certified": self.certified, "ensemble_max": self.ensemble_max,
                "iterations": self.iterations, "note": self.note}


def truncated_matrix(K: Kernel, mu: DiscreteMeasure, eps: float) -> np.ndarray:
    """``A_ij = 1{d(x_i, x_j) > eps} K(x_i - x_j)`` on the support."""
    X = mu.space.coords[mu.support]
    A = K.matrix(X) if not K.is_zero else np.zeros((X.shape[0], X.shape[0]))
    A[K.space.distances(X) <= eps] = 0.0
    return A


def lp_operator_norm_estimate(K: Kernel, mu: DiscreteMeasure, p: float, eps: float,
                              ensemble_size: int = 8, seed: int = 0, tol: float = 1e-8) -> LpNormEstimate:
    """``||T_{mu, eps}||_{L^p -> L^p}``.

    p = 2: top singular value of ``W^{1/2} A W^{1/2}`` by power iteration
    (certified to ``tol``). Other p: the largest ratio over a seeded
    Gaussian ensemble, a lower bound only.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if not 1 < p < np.inf:
        raise ValidationError("need 1 < p < inf")
    supp = mu.support
    w = mu.weights[supp]
    A = truncated_matrix(K, mu, eps)
    ens = 0.0
    gen = rng(seed, 0x1B)
    for _ in range(ensemble_size):
        f = gen.standard_normal(supp.size)
        Tf = A @ (f * w)
        nf = np.sum(np.abs(f) ** p * w) ** (1 / p)
        ens = max(ens, float(np.sum(np.abs(Tf) ** p * w) ** (1 / p) / nf))
    if p == 2:
        if not np.any(A):
            return LpNormEstimate(0.0, True, ens, 0, "zero operator")
        sw = np.sqrt(w)
        Bm = sw[:, None] * A * sw[None, :]
        res = power_iteration(lambda v: Bm @ v, lambda v: Bm.T @ v, supp.size, tol=tol, seed=seed)
        if not res.converged:
            raise ValidationError("power iteration did not converge")
        return LpNormEstimate(res.value, True, ens, res.iterations, "power iteration on the weighted matrix")
    return LpNormEstimate(ens, False, ens, 0,
                          "random-ensemble lower bound; interpolation between p=2 and the weak (1,1) "
                          "endpoint bounds the true norm but is not computed")


# ---------------------------------------------------------------- gluing

@dataclass
class GlueReport:
    lam: float
    norm1: float
    mass_main: float
    m_A1: float
    m_A2: float
    m_B1: float
    m_B2: float
    c: float
    C1: float
    reg: float
    reg_needed: float
    C_M: float
    C2: float
    C: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("lam", "norm1", "mass_main", "m_A1", "m_A2", "m_B1", "m_B2", "c",
                                              "C1", "reg", "reg_needed", "C_M", "C2", "C")}
        out["checks"] = dict(self.checks)
        out["passed"] = self.passed
        return out


def _le(a, b) -> bool:
    return bool(a <= b * (1 + ROUNDING_SLACK) + 1e-300)


def glue_check(K: Kernel, mu: DiscreteMeasure, A_mask, f, lam: float, c: float | None = None,
               C1: float | None = None, reg: float | None = None) -> GlueReport:
    """Check the gluing estimate for ``supp(mu) = A cup B`` with ``d(A, B) > diam(B)``.

    The four level-set masses of the splitting ``T_* <= T_{mu_A,*} + T_{mu_B,*}``
    are computed exactly and each is compared with its bound:

    * ``m_A1, m_B2 <= c ||f||_1 / lam`` with c the per-piece weak constant
      (measured on this f when not given);
    * on B, ``T_{mu_A,*} f <= C1 int_A |f| / d <= C1 ||f||_1 / diam(B)``, then
      ``m_B1 <= (1/lam) int_B T_{mu_A,*} f <= C1 mu(B) ||f||_1 / (lam diam B) <= C1 reg ||f||_1 / lam``;
    * on A, ``T_{mu_B,*} f(x) <= C1 / d(x,B) int_{B(x, 2d(x,B))} |f| <= 2 C1 reg M f(x)``, then
      ``m_A2 <= mu{M f > lam / (2 C1 reg)} <= C2 ||f||_1 / lam`` with ``C2 = 2 C1 reg C_M``.

    ``reg`` used is the larger of the supplied value and the smallest
    value that the two regularity steps above need on this instance.
    When B is a single point (diam 0) the distance d(A, B) replaces diam(B).
    """
    A = np.asarray(A_mask, dtype=bool)
    supp = mu.weights > 0
    A = A & supp
    B = supp & ~A
    if not A.any() or not B.any():
        raise ValidationError("both pieces must carry mass")
    sp = mu.space
    iA, iB = np.flatnonzero(A), np.flatnonzero(B)
    DAB = sp.norm.distances(sp.coords[iA], sp.coords[iB])
    dAB = float(DAB.min())
    diamB = float(sp.norm.distances(sp.coords[iB]).max())
    if not dAB > diamB:
        i, j = np.unravel_index(np.argmin(DAB), DAB.shape)
        raise ValidationError(f"need d(A,B) > diam(B): d(A,B) = {dAB!r} (points {iA[i]}, {iB[j]}), "
                              f"diam(B) = {diamB!r}")
    f = np.asarray(f, dtype=float)
    absf = np.abs(f)
    norm1 = float(np.sum(absf * mu.weights))
    C1 = K.B if C1 is None else float(C1)
    muA, muB = mu.restricted(A), mu.restricted(B)
    T = SingularIntegral(K, mu).maximal(f)
    T1 = SingularIntegral(K, muA).maximal(f)
    T2 = SingularIntegral(K, muB).maximal(f)
    Mf = np.zeros(len(mu))
    Mf[supp] = maximal_function_all(mu, f, np.flatnonzero(supp))
    w = mu.weights

    def mass(mask):
        return float(w[mask].sum())

    main = mass(supp & (T > 2 * lam))
    m_A1, m_A2 = mass(A & (T1 > lam)), mass(A & (T2 > lam))
    m_B1, m_B2 = mass(B & (T1 > lam)), mass(B & (T2 > lam))
    if c is None:
        cA = weak11_constant(T1, mu, f, A) if norm1 > 0 else 0.0
        cB = weak11_constant(T2, mu, f, B) if norm1 > 0 else 0.0
        c = max(cA, cB)
    diam_eff = diamB if diamB > 0 else dAB

    # pointwise chain on B
    DBA = DAB.T
    intA = (absf[iA] * w[iA])[None, :] / DBA
    chainB1 = C1 * intA.sum(axis=1)
    # pointwise chain on A
    dxB = DAB.min(axis=1)
    intB = C1 * ((absf[iB] * w[iB])[None, :] / DAB).sum(axis=1)
    D_all = sp.norm.distances(sp.coords[iA], sp.coords)
    ball = D_all < 2 * dxB[:, None]
    ball_f = (ball * (absf * w)[None, :]).sum(axis=1)
    ball_mu = (ball * w[None, :]).sum(axis=1)
    reg_needed = max(mass(B) / diam_eff, float(np.max(ball_mu / (2 * dxB))))
    reg_used = max(reg_needed, 0.0 if reg is None else float(reg))
    mid = C1 / dxB * ball_f
    # weak constant of M_mu on A for this f, exact
    C_M = weak11_constant(np.where(A, Mf, 0.0), mu, f, A) if norm1 > 0 else 0.0
    C2 = 2 * C1 * reg_used * C_M
    C = 2 * c + C1 * reg_used + C2
    lam_M = lam / (2 * C1 * reg_used) if C1 > 0 else np.inf
    checks = {
        "split_e0": _le(main, m_A1 + m_A2 + m_B1 + m_B2),
        "m_A1_le_c": _le(m_A1 * lam, c * norm1),
        "m_B2_le_c": _le(m_B2 * lam, c * norm1),
        "B_pointwise_integral": bool(np.all([_le(a, b) for a, b in zip(T1[iB], chainB1)])),
        "B_pointwise_diam": bool(np.all([_le(a, C1 * norm1 / diam_eff) for a in chainB1])),
        "m_B1_chebyshev": _le(m_B1 * lam, float(np.sum(T1[iB] * w[iB]))),
        "m_B1_diam": _le(float(np.sum(T1[iB] * w[iB])), C1 * mass(B) * norm1 / diam_eff),
        "m_B1_reg": _le(C1 * mass(B) * norm1 / diam_eff, C1 * reg_used * norm1),
        "A_pointwise_integral": bool(np.all([_le(a, b) for a, b in zip(T2[iA], intB)])),
        "A_pointwise_ball": bool(np.all([_le(a, b) for a, b in zip(intB, mid)])),
        "A_pointwise_maximal": bool(np.all([_le(a, 2 * C1 * reg_used * m) for a, m in zip(mid, Mf[iA])])),
        "m_A2_level": _le(m_A2, mass(A & (Mf > lam_M))),
        "m_A2_le_C2": _le(m_A2 * lam, C2 * norm1),
        "combined": _le(main * lam, C * norm1),
    }
    return GlueReport(float(lam), norm1, main, m_A1, m_A2, m_B1, m_B2, float(c), float(C1), float(reg_used),
                      float(reg_needed), float(C_M), float(C2), float(C), checks)


# ---------------------------------------------------------------- tail bounds

@dataclass(frozen=True)
class TailReport:
    lhs: float
    rhs_proof: float
    rhs_statement: float
    C_nu: float
    maximal: float

    @property
    def passed(self) -> bool:
        return _le(self.lhs, self.rhs_proof)

    @property
    def slack(self) -> float:
        return self.rhs_proof - self.lhs

    @property
    def statement_passed(self) -> bool:
        return _le(self.lhs, self.rhs_statement)

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs_proof_constant": self.rhs_proof, "rhs_statement_constant": self.rhs_statement,
                "C_nu": self.C_nu, "M_f": self.maximal, "passed": self.passed,
                "statement_passed": self.statement_passed, "slack": self.slack}


def tail_bound_check(mu: DiscreteMeasure, f, x: int, R: float, beta: float, n: int = 1,
                     C_nu: float | None = None) -> TailReport:
    """Compare ``int_{d(x,y) >= R} |f(y)| / d(x,y)^(n+beta) dmu`` with ``C_nu 2^(n+beta)/(2^beta - 1) R^-beta M f(x)``.

    ``C_nu`` defaults to the exact upper regularity constant at center x
    over radii ``r >= 2R``, the only scales the dyadic-annulus argument uses.
    The report also carries the right side with ``C_nu`` in the denominator.
    """
    if not R > 0:
        raise ValidationError("R must be positive")
    if mu.weights[x] <= 0:
        raise ValidationError("x must lie in the support")
    f = np.abs(np.asarray(f, dtype=float))
    d = mu.space.row(int(x))
    sel = (d >= R) & (mu.weights > 0)
    lhs = float(np.sum(f[sel] * mu.weights[sel] / d[sel] ** (n + beta)))
    if C_nu is None:
        C_nu = upper_regularity_exact(mu, n, 2 * R, centers=[x])
    M = maximal_function(mu, f, x)
    const = 2.0 ** (n + beta) / (2.0 ** beta - 1.0)
    rhs = C_nu * const * R ** (-beta) * M
    rhs_stmt = (const / C_nu) * R ** (-beta) * M if C_nu > 0 else np.inf
    return TailReport(lhs, float(rhs), float(rhs_stmt), float(C_nu), float(M))


@dataclass(frozen=True)
class SupportTailReport:
    lhs: float
    majorant: float
    majorant_as_stated: float
    C_nu: float
    far_points: int
    vacuous: bool

    @property
    def passed(self) -> bool:
        return self.vacuous or _le(self.lhs, self.majorant)

    @property
    def ratio(self) -> float:
        return self.majorant / self.lhs if self.lhs > 0 else np.inf

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "majorant": self.majorant, "majorant_as_stated": self.majorant_as_stated,
                "C_nu": self.C_nu, "far_points": self.far_points, "vacuous": self.vacuous,
                "passed": self.passed, "majorant_over_lhs": self.ratio}


def _annulus_series(n: int, p: float, diamZ: float, kmax: int = 4000) -> tuple[float, float]:
    k = np.arange(kmax + 1, dtype=float)
    # both series decay like 2^{-kn(p-1)}; exponents kept in log2 form to avoid overflow
    rig_exp = n * ((k + 1) + np.log2(1 + diamZ * 2.0 ** -(k + 1)) - k * p)
    rig = float(np.sum(np.exp2(rig_exp)))
    stated = float(np.sum(np.exp2(n * (k + 1) - k * n * p) + diamZ ** n * np.exp2(-k * n * p)))
    return rig, stated


def support_tail_check(K: Kernel, mu: DiscreteMeasure, f, p: float, n: int = 1,
                       C_nu: float | None = None, op: SingularIntegral | None = None) -> SupportTailReport:
    """``int_{d(x,Z) >= 1} |T_* f|^p dmu`` against the annulus majorant, Z = supp f.

    Majorant: ``C_K^p 2^(np) ||f||_p^p mu(Z)^(p-1) C_nu sum_k (2^(k+1) + diam Z)^n / 2^(knp)``,
    from ``T_* f(x) <= C_K (d(x,Z)/2)^-n ||f||_p mu(Z)^(1-1/p)`` and
    ``mu(A_k) <= C_nu (2^(k+1) + diam Z)^n``. ``C_nu`` defaults to the exact
    upper regularity constant over centers in Z and radii ``>= 2 + diam Z``.
    """
    if not 1 < p < np.inf:
        raise ValidationError("need 1 < p < inf")
    f = np.asarray(f, dtype=float)
    supp = mu.weights > 0
    Z = np.flatnonzero(supp & (f != 0))
    if Z.size == 0:
        return SupportTailReport(0.0, 0.0, 0.0, 0.0, 0, True)
    sp = mu.space
    dZ = sp.norm.distances(sp.coords, sp.coords[Z]).min(axis=1)
    far = np.flatnonzero(supp & (dZ >= 1))
    diamZ = float(sp.norm.distances(sp.coords[Z]).max())
    if C_nu is None:
        C_nu = upper_regularity_exact(mu, n, 2 + diamZ, centers=Z)
    w = mu.weights
    normp = float(np.sum(np.abs(f[Z]) ** p * w[Z]))
    muZ = float(w[Z].sum())
    CK = K.B
    rig, stated = _annulus_series(n, p, diamZ)
    majorant = CK ** p * 2.0 ** (n * p) * normp * muZ ** (p - 1) * C_nu * rig
    as_stated = CK ** p * normp * muZ ** (p - 1) * 2.0 ** n * C_nu * stated
    if far.size == 0:
        return SupportTailReport(0.0, float(majorant), float(as_stated), float(C_nu), 0, True)
    op = op or SingularIntegral(K, mu)
    T = op.maximal(f, far)
    lhs = float(np.sum(np.abs(T) ** p * w[far]))
    return SupportTailReport(lhs, float(majorant), float(as_stated), float(C_nu), int(far.size), False)


# ---------------------------------------------------------------- tables

def sio_rows(op: SingularIntegral, f, eps_grid, idx=None, Mf=None):
    """Rows (point, eps, T_eps f, T_* f, M f) for CSV output."""
    idx = np.arange(op.n) if idx is None else np.asarray(idx)
    Te = op.truncated_grid(f, eps_grid, idx)
    Ts = op.maximal(f, idx)
    M = maximal_function_all(op.mu, f, idx) if Mf is None else np.asarray(Mf)[idx]
    rows = []
    for a, i in enumerate(idx):
        for b, e in enumerate(eps_grid):
            rows.append((int(i), float(e), float(Te[a, b]), float(Ts[a]), float(M[a])))
    return rows


def rows_to_csv(header, rows, seed=None) -> str:
    buf = io.StringIO()
    if seed is not None:
        buf.write(f"# seed={int(seed)}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()
