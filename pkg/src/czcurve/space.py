"""Finite metric spaces, normed coordinate spaces and discrete measures.

Balls are open throughout: ``B(x, r) = {y : d(x, y) < r}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ._util import Estimate, ValidationError, log_radius_grid

TRIANGLE_SLACK = 1e-12
EXACT_COVER_LIMIT = 20


@dataclass(frozen=True)
class NormedSpace:
    """``R^dimension`` with the sup-norm or a p-norm, 1 < p < inf."""

    dimension: int
    kind: str = "p"
    p: float = 2.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError("dimension must be positive")
        if self.kind not in ("p", "sup"):
            raise ValidationError(f"unknown norm kind {self.kind!r}")
        if self.kind == "p" and not (1.0 < self.p < np.inf):
            raise ValidationError("p-norm needs 1 < p < inf")

    @classmethod
    def euclidean(cls, dimension: int) -> "NormedSpace":
        return cls(dimension, "p", 2.0)

    @classmethod
    def sup(cls, dimension: int) -> "NormedSpace":
        return cls(dimension, "sup", np.inf)

    @property
    def exponent(self) -> float:
        return np.inf if self.kind == "sup" else float(self.p)

    @property
    def conjugate_exponent(self) -> float:
        if self.kind == "sup":
            return 1.0
        return self.p / (self.p - 1.0)

    def norm(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "sup":
            return np.max(np.abs(x), axis=-1)
        if self.p == 2.0:
            return np.sqrt(np.sum(x * x, axis=-1))
        return np.sum(np.abs(x) ** self.p, axis=-1) ** (1.0 / self.p)

    def dual_norm(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        q = self.conjugate_exponent
        if q == 1.0:
            return np.sum(np.abs(y), axis=-1)
        return np.sum(np.abs(y) ** q, axis=-1) ** (1.0 / q)

    def distances(self, X, Y=None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        if self.kind == "sup":
            return cdist(X, Y, "chebyshev")
        if self.p == 2.0:
            return cdist(X, Y, "euclidean")
        return cdist(X, Y, "minkowski", p=self.p)

    def to_json(self) -> dict:
        if self.kind == "sup":
            return {"kind": "sup"}
        return {"kind": "p", "p": self.p}

    @classmethod
    def from_json(cls, doc: dict, dimension: int) -> "NormedSpace":
        if doc.get("kind", "p") == "sup":
            return cls.sup(dimension)
        return cls(dimension, "p", float(doc.get("p", 2.0)))


class FiniteMetricSpace:
    """Points with an exact pairwise distance table.

    Built either from an explicit table (validated, including the
    triangle inequality) or from coordinates in a :class:`NormedSpace`, in
    which case the table is computed lazily from the norm.
    """

    def __init__(self, points=None, dist=None, *, coords=None, norm: NormedSpace | None = None,
                 validate: bool = True):
        if coords is not None:
            coords = np.atleast_2d(np.asarray(coords, dtype=float))
            if norm is None:
                norm = NormedSpace.euclidean(coords.shape[1])
            if norm.dimension != coords.shape[1]:
                raise ValidationError("coordinate dimension does not match the norm")
            self.coords = coords
            self.coords.setflags(write=False)
            self.norm = norm
            n = coords.shape[0]
            self._dist = None
        else:
            if dist is None:
                raise ValidationError("need either a distance table or coordinates")
            D = np.array(dist, dtype=float)
            if D.ndim != 2 or D.shape[0] != D.shape[1]:
                raise ValidationError("distance table must be square")
            n = D.shape[0]
            if validate:
                _validate_table(D)
            D.setflags(write=False)
            self._dist = D
            self.coords = None
            self.norm = None
        if n == 0:
            raise ValidationError("empty metric space")
        self.points = list(range(n)) if points is None else list(points)
        if len(self.points) != n:
            raise ValidationError("points and distance table differ in size")
        self._tree = None

    @classmethod
    def from_points(cls, coords, norm: NormedSpace | None = None, points=None) -> "FiniteMetricSpace":
        return cls(points, coords=coords, norm=norm)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            D = self.norm.distances(self.coords)
            D.setflags(write=False)
            self._dist = D
        return self._dist

    def row(self, i) -> np.ndarray:
        if self._dist is not None:
            return self._dist[i]
        return self.norm.distances(self.coords[i:i + 1], self.coords)[0]

    def distances_from(self, x) -> np.ndarray:
        """Distances from a point given by index or (for coordinate spaces) by coordinates."""
        if isinstance(x, (int, np.integer)):
            return self.row(int(x))
        if self.coords is None:
            raise ValidationError("coordinates given for a space without coordinates")
        return self.norm.distances(np.asarray(x, dtype=float)[None, :], self.coords)[0]

    def diameter(self) -> float:
        return float(self.dist.max())

    def min_positive_distance(self) -> float:
        if self.coords is not None:
            d, _ = self.kdtree().query(self.coords, k=2, p=self.norm.exponent)
            return float(d[:, 1].min())
        D = self.dist
        return float(D[D > 0].min())

    def kdtree(self) -> cKDTree:
        if self.coords is None:
            raise ValidationError("k-d tree needs coordinates")
        if self._tree is None:
            self._tree = cKDTree(self.coords)
        return self._tree

    def subspace(self, idx) -> "FiniteMetricSpace":
        idx = np.asarray(idx)
        if self.coords is not None:
            return FiniteMetricSpace([self.points[i] for i in idx], coords=self.coords[idx], norm=self.norm)
        return FiniteMetricSpace([self.points[i] for i in idx], self.dist[np.ix_(idx, idx)], validate=False)

    def to_json(self) -> dict:
        return {"points": list(self.points), "dist": self.dist.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "FiniteMetricSpace":
        if "coords" in doc:
            coords = np.asarray(doc["coords"], dtype=float)
            norm = NormedSpace.from_json(doc.get("norm", {"kind": "p", "p": 2.0}), coords.shape[1])
            return cls(doc.get("points"), coords=coords, norm=norm)
        return cls(doc.get("points"), doc["dist"])


def _validate_table(D: np.ndarray) -> None:
    if not np.all(np.isfinite(D)):
        raise ValidationError("distance table has non-finite entries")
    if np.any(np.diag(D) != 0.0):
        raise ValidationError("distance table has nonzero diagonal")
    if np.any(D < 0):
        raise ValidationError("distance table has negative entries")
    if not np.array_equal(D, D.T):
        i, j = np.argwhere(D != D.T)[0]
        raise ValidationError(f"distance table not symmetric at ({i}, {j})")
    n = D.shape[0]
    off = D + np.eye(n)
    if np.any(off <= 0):
        i, j = np.argwhere(off <= 0)[0]
        raise ValidationError(f"distinct points {i} and {j} at distance 0")
    for k in range(n):
        bad = D[:, k][:, None] + D[k, :][None, :] - D < -TRIANGLE_SLACK
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(f"triangle inequality fails for ({i}, {k}, {j})")


class DiscreteMeasure:
    """Nonnegative point masses on the points of a :class:`FiniteMetricSpace`."""

    def __init__(self, space: FiniteMetricSpace, weights):
        w = np.array(weights, dtype=float)
        if w.shape != (len(space),):
            raise ValidationError("one weight per point required")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("weights must be finite and nonnegative")
        w.setflags(write=False)
        self.space = space
        self.weights = w

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def coords(self):
        return self.space.coords

    def scaled(self, s: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.space, self.weights * s)

    def restricted(self, mask) -> "DiscreteMeasure":
        """Same space, weights zeroed outside ``mask``."""
        return DiscreteMeasure(self.space, np.where(mask, self.weights, 0.0))

    def mass(self, mask) -> float:
        return float(self.weights[np.asarray(mask)].sum())

    def ball_mass(self, x, r: float) -> float:
        return float(self.weights[self.space.distances_from(x) < r].sum())

    def ball_masses(self, centers, radii) -> np.ndarray:
        """Masses of open balls: array of shape (len(centers), len(radii))."""
        radii = np.asarray(radii, dtype=float)
        out = np.empty((len(centers), len(radii)))
        for row, c in enumerate(centers):
            d = self.space.row(int(c))
            order = np.argsort(d, kind="stable")
            cw = np.concatenate([[0.0], np.cumsum(self.weights[order])])
            counts = np.searchsorted(d[order], radii, side="left")
            out[row] = cw[counts]
        return out

    def to_json(self, space_ref="space") -> dict:
        return {"space": space_ref, "weights": self.weights.tolist()}


def kuratowski_embed(M: FiniteMetricSpace) -> FiniteMetricSpace:
    """Map point ``i`` to its distance vector ``(d(i, j))_j`` in sup-norm space.

    The sup-distance of two images equals the original distance: the
    coordinate ``j`` attains it and the triangle inequality bounds the rest.
    """
    D = np.array(M.dist)
    return FiniteMetricSpace(list(M.points), coords=D, norm=NormedSpace.sup(len(M)))


def embedding_error(M: FiniteMetricSpace, E: FiniteMetricSpace) -> float:
    return float(np.max(np.abs(E.dist - M.dist)))


def _min_cover_exact(masks: list[int], full: int, upper: int) -> int:
    masks = sorted(set(m & full for m in masks if m & full), key=lambda m: -bin(m).count("1"))
    # drop masks contained in another mask
    kept = []
    for m in masks:
        if not any((m | k) == k for k in kept):
            kept.append(m)
    biggest = max(bin(m).count("1") for m in kept)
    by_elem = {}
    bit = 1
    while bit <= full:
        if bit & full:
            by_elem[bit] = [m for m in kept if m & bit]
        bit <<= 1
    best = upper

    def rec(covered: int, used: int):
        nonlocal best
        if covered == full:
            best = min(best, used)
            return
        left = bin(full & ~covered).count("1")
        if used + -(-left // biggest) >= best:
            return
        rest = full & ~covered
        elem = min((b for b in by_elem if b & rest), key=lambda b: len(by_elem[b]))
        for m in by_elem[elem]:
            rec(covered | m, used + 1)

    rec(0, 0)
    return best


def _greedy_cover(cover: np.ndarray) -> int:
    """``cover[c, e]``: candidate ``c`` covers element ``e``. Returns greedy count."""
    remaining = np.ones(cover.shape[1], dtype=bool)
    count = 0
    cov = cover.astype(np.int32)
    while remaining.any():
        gains = cov @ remaining.astype(np.int32)
        best = int(np.argmax(gains))
        remaining &= ~cover[best]
        count += 1
    return count


def covering_number(M: FiniteMetricSpace, center: int, r: float) -> Estimate:
    """Fewest open balls of radius r/2 centered at points of M covering B(center, r)."""
    d = M.row(center)
    elems = np.flatnonzero(d < r)
    if len(elems) == 1:
        return Estimate(1, True)
    sub = M.dist[elems] if M._dist is not None else M.norm.distances(M.coords[elems], M.coords)
    cover = (sub < r / 2).T  # candidates x elements
    cover = cover[cover.any(axis=1)]
    greedy = _greedy_cover(cover)
    if len(elems) > EXACT_COVER_LIMIT or greedy <= 1:
        return Estimate(greedy, greedy <= 1 or len(elems) <= EXACT_COVER_LIMIT,
                        "" if greedy <= 1 else "greedy upper bound")
    weights = 1 << np.arange(len(elems), dtype=np.int64)
    masks = [int(weights[row].sum()) for row in cover]
    full = (1 << len(elems)) - 1
    return Estimate(_min_cover_exact(masks, full, greedy), True)


def doubling_constant(M: FiniteMetricSpace, radius_grid, centers=None) -> Estimate:
    """Largest covering number over ``centers`` x ``radius_grid``.

    Exact when every ball involved holds at most 20 points; otherwise the
    greedy count is an upper bound and ``exact`` is False.
    """
    if len(M) == 0:
        raise ValidationError("empty space")
    radius_grid = np.asarray(radius_grid, dtype=float)
    if radius_grid.size == 0 or np.any(radius_grid <= 0):
        raise ValidationError("radius grid must be nonempty and positive")
    centers = range(len(M)) if centers is None else centers
    best, exact = 1, True
    for c in centers:
        for r in radius_grid:
            est = covering_number(M, int(c), float(r))
            if est.value > best:
                best = int(est.value)
            exact = exact and est.exact
    return Estimate(best, exact, "" if exact else "greedy upper bound on some balls")


@dataclass(frozen=True)
class RegularityEstimate:
    C_lower: float
    C_upper: float
    reg: float
    radii: np.ndarray
    regular: bool

    def to_json(self) -> dict:
        return {"C_lower": self.C_lower, "C_upper": self.C_upper, "reg": self.reg,
                "r_min": float(self.radii[0]), "r_max": float(self.radii[-1]),
                "radii_per_octave": 16, "regular": self.regular}


def _ratios(mu: DiscreteMeasure, n: int, scale_range) -> tuple[np.ndarray, np.ndarray]:
    r_min, r_max = scale_range
    if not r_min > 0:
        raise ValidationError("r_min must be positive")
    radii = log_radius_grid(r_min, r_max, 16)
    supp = mu.support
    if supp.size == 0:
        raise ValidationError("measure has empty support")
    masses = mu.ball_masses(supp, radii)
    return masses / radii[None, :] ** n, radii


def upper_regularity_constant(mu: DiscreteMeasure, n: int, scale_range) -> float:
    """max over support points and a 16-per-octave radius grid of mu(B(x,r)) / r^n."""
    ratios, _ = _ratios(mu, n, scale_range)
    return float(ratios.max())


def regularity_constants(mu: DiscreteMeasure, scale_range, n: int = 1,
                         reg_threshold: float = 100.0) -> RegularityEstimate:
    if mu.total_mass <= 0:
        raise ValidationError("zero total mass")
    ratios, radii = _ratios(mu, n, scale_range)
    lo, hi = float(ratios.min()), float(ratios.max())
    reg = max(hi, 1.0 / lo) if lo > 0 else np.inf
    return RegularityEstimate(lo, hi, reg, radii, bool(reg <= reg_threshold))


def upper_regularity_exact(mu: DiscreteMeasure, n: int, r_min: float, r_max: float = np.inf,
                           centers=None) -> float:
    """Exact sup of mu(B(x,r))/r^n over centers and all r in [r_min, r_max].

    Open-ball masses only jump just after a distance value, so the sup is
    attained at r_min or approached as r decreases to a distance d_j.
    """
    centers = mu.support if centers is None else np.asarray(centers)
    best = 0.0
    for c in centers:
        d = mu.space.row(int(c))
        order = np.argsort(d, kind="stable")
        ds = d[order]
        cw = np.cumsum(mu.weights[order])
        # closed-ball mass at each distinct distance
        last = np.r_[ds[1:] != ds[:-1], True]
        dj, mj = ds[last], cw[last]
        sel = (dj >= r_min) & (dj < r_max) & (dj > 0)
        if sel.any():
            best = max(best, float(np.max(mj[sel] / dj[sel] ** n)))
        m0 = float(mu.weights[d < r_min].sum())
        best = max(best, m0 / r_min ** n)
    return best


def is_metric(D) -> bool:
    try:
        _validate_table(np.asarray(D, dtype=float))
    except ValidationError:
        return False
    return True


def space_to_json(M: FiniteMetricSpace) -> str:
    return json.dumps(M.to_json(), sort_keys=True)


def pairwise_check(M: FiniteMetricSpace, E: FiniteMetricSpace) -> int:
    """Number of pairs whose embedded sup-distance differs from the table by more than 1e-12."""
    bad = 0
    for i, j in combinations(range(len(M)), 2):
        if abs(np.max(np.abs(E.coords[i] - E.coords[j])) - M.dist[i, j]) > 1e-12:
            bad += 1
    return bad


def measure_doubling_constant(mu: DiscreteMeasure, centers=None) -> float:
    """Exact sup over centers and r > 0 of mu(B(x, 2r)) / mu(B(x, r)).

    For r in (d_k, d_{k+1}] the inner mass is the closed mass at d_k and
    the outer mass is largest at r = d_{k+1}.
    """
    centers = mu.support if centers is None else np.asarray(centers)
    best = 1.0
    for c in centers:
        d = mu.space.row(int(c))
        order = np.argsort(d, kind="stable")
        ds = d[order]
        cw = np.cumsum(mu.weights[order])
        last = np.r_[ds[1:] != ds[:-1], True]
        dj, mj = ds[last], cw[last]
        if dj.size < 2:
            continue
        inner = mj[:-1]
        outer_count = np.searchsorted(ds, 2 * dj[1:], side="left")
        outer = np.where(outer_count > 0, cw[np.maximum(outer_count - 1, 0)], 0.0)
        ok = inner > 0
        if ok.any():
            best = max(best, float(np.max(outer[ok] / inner[ok])))
    return best
