"""Nested cube hierarchies and Whitney-type decompositions of finite metric spaces.

Cubes use the scale ratio 1/8. Level k has centers forming a maximal
``(1/2) 8^-k``-separated net, each net nested in the next finer one. A
finer center attaches to its nearest coarser center (ties to the lowest
point index), and a cube is everything whose chain of attachments ends at
its center. A point within ``(1/16) 8^-k`` of a center has its level-(k+1)
ancestor within ``(1/16 + 1/14) 8^-k`` of that center, while any other
level-k center is at least ``(1/2 - 1/16 - 1/14) 8^-k`` further away, so the
inner-ball property holds by construction; it is still verified exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._util import ValidationError, rng
from .space import DiscreteMeasure, FiniteMetricSpace, doubling_constant

INNER = 1.0 / 16
OUTER = 2.0
BAND_LO, BAND_HI = 40.0, 320.0
DIST_LO = 32.0
BALL = 16.0
MAX_RETRIES = 8


def _scale(k: int) -> float:
    return 8.0 ** (-k)


def auto_levels(M: FiniteMetricSpace) -> tuple[int, int]:
    """``k_min`` with ``8^-k_min > diam`` and ``k_max`` with ``8^-k_max`` below the smallest distance."""
    diam = M.diameter()
    if len(M) == 1 or diam == 0:
        return 0, 0
    dmin = M.min_positive_distance()
    k_min = int(np.floor(-np.log(diam) / np.log(8)))
    while not _scale(k_min) > diam:
        k_min -= 1
    k_max = int(np.ceil(-np.log(dmin) / np.log(8)))
    while not _scale(k_max) < dmin:
        k_max += 1
    return k_min, k_max


@dataclass
class ChristCubeTree:
    """Per level k: ``centers[k]`` (point indices, ascending) and ``labels[k]`` (cube of each point).

    ``parent[k][i]`` is the level-(k-1) cube containing cube i of level k.
    Levels finer than ``k_max`` are singletons.
    """

    space: FiniteMetricSpace
    k_min: int
    k_max: int
    centers: dict
    labels: dict
    parent: dict
    attempt: int = 0

    def level(self, k: int):
        """(centers, labels) at level k, extending with singletons below the finest level."""
        if k < self.k_min:
            raise ValidationError(f"level {k} coarser than the tree (k_min={self.k_min})")
        if k > self.k_max:
            n = len(self.space)
            return np.arange(n), np.arange(n)
        return self.centers[k], self.labels[k]

    def cube(self, k: int, i: int) -> np.ndarray:
        _, lab = self.level(k)
        return np.flatnonzero(lab == i)

    def to_json(self) -> dict:
        return {"k_min": self.k_min, "k_max": self.k_max, "attempt": self.attempt,
                "levels": {str(k): {"centers": self.centers[k].tolist(), "labels": self.labels[k].tolist()}
                           for k in range(self.k_min, self.k_max + 1)}}


def _nets(D: np.ndarray, k_min: int, k_max: int, order: np.ndarray) -> dict:
    nets = {}
    current: list[int] = []
    for k in range(k_min, k_max + 1):
        r = 0.5 * _scale(k)
        covered = np.zeros(D.shape[0], dtype=bool)
        for c in current:
            covered |= D[c] < r
        chosen = list(current)
        for p in order:
            if not covered[p]:
                chosen.append(int(p))
                covered |= D[p] < r
        current = sorted(chosen)
        nets[k] = np.array(current, dtype=int)
    return nets


def verify_tree(tree: ChristCubeTree) -> dict:
    """Exact checks: partition, nesting and roundness on every level. Returns counts and a witness."""
    D = tree.space.dist
    n = len(tree.space)
    out = {"partition": True, "nesting": True, "roundness": True, "witness": None}
    for k in range(tree.k_min, tree.k_max + 1):
        cen, lab = tree.centers[k], tree.labels[k]
        if lab.shape != (n,) or lab.min() < 0 or lab.max() >= cen.size:
            out["partition"] = False
        if k > tree.k_min:
            par = tree.parent[k]
            coarse = tree.labels[k - 1]
            if not np.array_equal(coarse, par[lab]):
                out["nesting"] = False
                bad = int(np.flatnonzero(coarse != par[lab])[0])
                out["witness"] = out["witness"] or {"level": k, "point": bad, "property": "nesting"}
        s = _scale(k)
        for i, c in enumerate(cen):
            if lab[c] != i:
                out["partition"] = False
            inner = D[c] < INNER * s
            members = lab == i
            if np.any(inner & ~members) or np.any(members & ~(D[c] < OUTER * s)):
                out["roundness"] = False
                bad = np.flatnonzero((inner & ~members) | (members & ~(D[c] < OUTER * s)))
                out["witness"] = out["witness"] or {"level": k, "cube": i, "center": int(c),
                                                    "point": int(bad[0]), "property": "roundness"}
    out["ok"] = out["partition"] and out["nesting"] and out["roundness"]
    return out


def christ_cubes(M: FiniteMetricSpace, k_min: int | None = None, k_max: int | None = None,
                 seed: int = 0) -> ChristCubeTree:
    """Build and verify the cube hierarchy. Up to 8 attempts: index order first, then seeded orders."""
    a_min, a_max = auto_levels(M)
    k_min = a_min if k_min is None else int(k_min)
    k_max = a_max if k_max is None else int(k_max)
    if k_max < k_min:
        raise ValidationError("need k_max >= k_min")
    if len(M) > 1:
        if not _scale(k_min) > M.diameter():
            raise ValidationError("8^-k_min must exceed the diameter")
        if not _scale(k_max) < M.min_positive_distance():
            raise ValidationError("8^-k_max must be below the smallest distance")
    D = M.dist
    n = len(M)
    last = None
    for attempt in range(MAX_RETRIES):
        order = np.arange(n) if attempt == 0 else rng(seed, attempt).permutation(n)
        nets = _nets(D, k_min, k_max, order)
        parent = {}
        for k in range(k_min + 1, k_max + 1):
            sub = D[np.ix_(nets[k], nets[k - 1])]
            parent[k] = np.argmin(sub, axis=1)
        labels = {k_max: np.searchsorted(nets[k_max], np.arange(n))}
        if not np.array_equal(nets[k_max], np.arange(n)):
            raise ValidationError("finest level is not all singletons; increase k_max")
        for k in range(k_max - 1, k_min - 1, -1):
            labels[k] = parent[k + 1][labels[k + 1]]
        tree = ChristCubeTree(M, k_min, k_max, nets, labels, parent, attempt)
        last = verify_tree(tree)
        if last["ok"]:
            return tree
    raise ValidationError(f"cube properties failed after {MAX_RETRIES} orderings: {last['witness']}")


# ---------------------------------------------------------------- Whitney pieces

@dataclass
class Piece:
    members: np.ndarray
    center: int
    k: int
    dist_to_complement: float
    certificates: dict

    def to_json(self) -> dict:
        return {"members": self.members.tolist(), "center": self.center, "k": self.k,
                "dist_to_complement": self.dist_to_complement, "certificates": self.certificates}


@dataclass
class WhitneyDecomposition:
    pieces: list
    omega: np.ndarray
    complement: np.ndarray
    overlap_pointwise: int
    overlap_intersections: int
    C_D_cover: int
    properties: dict = field(default_factory=dict)

    @property
    def overlap_bound(self) -> int:
        return self.overlap_pointwise

    @property
    def ok(self) -> bool:
        return all(v for k, v in self.properties.items() if isinstance(v, bool))

    def to_json(self) -> dict:
        return {"pieces": [p.to_json() for p in self.pieces], "omega": self.omega.tolist(),
                "complement": self.complement.tolist(), "overlap_pointwise": self.overlap_pointwise,
                "overlap_intersections": self.overlap_intersections, "C_D_cover": self.C_D_cover,
                "properties": self.properties}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _as_mask(omega, n: int) -> np.ndarray:
    arr = np.asarray(omega)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise ValidationError("omega mask has the wrong length")
        return arr.copy()
    mask = np.zeros(n, dtype=bool)
    if arr.size:
        if arr.min() < 0 or arr.max() >= n:
            raise ValidationError("omega index out of range")
        mask[arr.astype(int)] = True
    return mask


def band_level(dc: float) -> int:
    """The k with ``40 * 8^-k < dc <= 320 * 8^-k``."""
    k = int(np.floor(np.log(BAND_HI / dc) / np.log(8)))
    while not BAND_LO * _scale(k) < dc:
        k += 1
    while not dc <= BAND_HI * _scale(k):
        k -= 1
    return k


def whitney_decompose(tree: ChristCubeTree, omega, M: FiniteMetricSpace | None = None) -> WhitneyDecomposition:
    """Maximal cubes among those meeting their own distance band, with exact certificates."""
    M = tree.space if M is None else M
    n = len(M)
    mask = _as_mask(omega, n)
    if not mask.any():
        raise ValidationError("omega is empty")
    if mask.all():
        raise ValidationError("complement empty, distance to complement undefined")
    D = M.dist
    om, oc = np.flatnonzero(mask), np.flatnonzero(~mask)
    dc_all = D[:, oc].min(axis=1)
    selected = {}
    for x in om:
        k = band_level(float(dc_all[x]))
        if k < tree.k_min:
            raise ValidationError(f"band level {k} coarser than the tree")
        _, lab = tree.level(k)
        selected.setdefault(k, set()).add(int(lab[x]))
    # keep a selected cube only if no coarser ancestor is selected
    keep = []
    for k in sorted(selected):
        cen, _ = tree.level(k)
        for i in sorted(selected[k]):
            c = int(cen[i])
            covered = False
            for k2 in range(max(tree.k_min, min(selected)), k):
                if k2 in selected:
                    _, lab2 = tree.level(k2)
                    if int(lab2[c]) in selected[k2]:
                        covered = True
                        break
            if not covered:
                keep.append((k, i, c))
    pieces = []
    owner = np.full(n, -1)
    disjoint = True
    for k, i, c in keep:
        _, lab = tree.level(k)
        mem = np.flatnonzero(lab == i)
        if np.any(owner[mem] >= 0):
            disjoint = False
        owner[mem] = len(pieces)
        s = _scale(k)
        dU = float(dc_all[mem].min())
        inner = D[c] < INNER * s
        cert = {
            "inner_ball": bool(np.all(np.isin(np.flatnonzero(inner), mem))),
            "outer_ball": bool(np.all(D[c, mem] < OUTER * s)),
            "dist_lower_32": bool(DIST_LO * s <= dU),
            "dist_upper_320": bool(dU <= BAND_HI * s),
            "dist_lower_band": bool((BAND_LO - 16.0 / 7.0) * s <= dU),
            "inside_omega": bool(np.all(mask[mem])),
            "slack_lower_32": dU / s - DIST_LO,
            "slack_upper_320": BAND_HI - dU / s,
        }
        pieces.append(Piece(mem, c, k, dU, cert))
    covers = bool(np.array_equal(np.sort(np.flatnonzero(owner >= 0)), om))
    # overlap of the balls B(x_i, 16 * 8^-k_i) as point sets of M
    if pieces:
        balls = np.stack([D[p.center] < BALL * _scale(p.k) for p in pieces])
        pointwise = int(balls.sum(axis=0).max())
        bf = balls.astype(np.float32)  # exact: counts stay far below 2^24
        inter = int(((bf @ bf.T) > 0.5).sum(axis=1).max())
    else:
        pointwise = inter = 0
    cover = 0
    dmin = M.min_positive_distance() if n > 1 else np.inf
    for p in pieces:
        s = _scale(p.k)
        big = np.flatnonzero(D[p.center] < 1024 * s)
        # radius at or below the smallest distance: every ball is a single point
        cover = max(cover, int(big.size) if s / 1024 <= dmin else _greedy_cover_count(D, big, s / 1024))
    props = {
        "disjoint": disjoint,
        "union_is_omega": covers,
        "round": all(p.certificates["inner_ball"] and p.certificates["outer_ball"] for p in pieces),
        "distance_32_320": all(p.certificates["dist_lower_32"] and p.certificates["dist_upper_320"] for p in pieces),
        "band_chain": all(p.certificates["dist_lower_band"] for p in pieces),
        "inside_omega": all(p.certificates["inside_omega"] for p in pieces),
        "overlap_within_cover_bound": inter <= cover,
    }
    return WhitneyDecomposition(pieces, om, oc, pointwise, inter, cover, props)


def _greedy_cover_count(D: np.ndarray, pts: np.ndarray, r: float) -> int:
    """Greedy number of radius-r balls centered at points of M that cover ``pts``."""
    if pts.size == 0:
        return 0
    sub = D[np.ix_(pts, pts)] < r
    if np.all(sub.sum(axis=1) == 1):
        return int(pts.size)
    remaining = np.ones(pts.size, dtype=bool)
    count = 0
    cov = sub.astype(np.int32)
    while remaining.any():
        best = int(np.argmax(cov @ remaining.astype(np.int32)))
        remaining &= ~sub[best]
        count += 1
    return count


# ---------------------------------------------------------------- doubling classes

@dataclass
class DoublingClassification:
    I1: list
    I2: list
    b: float
    mass_I1: float
    mass_omega: float
    half_mass_ok: bool
    ratios: list

    def to_json(self) -> dict:
        return {"I1": self.I1, "I2": self.I2, "b": self.b, "mass_I1": self.mass_I1,
                "mass_omega": self.mass_omega, "half_mass_ok": self.half_mass_ok}


def classify_doubling(W: WhitneyDecomposition, nu: DiscreteMeasure, b: float | None = None) -> DoublingClassification:
    """Split pieces by ``nu(B(x_i, 16 s_i)) <= b nu(B(x_i, 2 s_i))``, ``s_i = 8^-k_i``.

    ``b`` defaults to twice the measured pointwise overlap. Also checks
    that the first class carries at least half of ``nu(Omega)``.
    """
    if b is None:
        b = 2.0 * max(W.overlap_pointwise, 1)
    I1, I2, ratios = [], [], []
    D = nu.space
    m1 = 0.0
    for idx, p in enumerate(W.pieces):
        s = _scale(p.k)
        d = D.row(p.center)
        big = float(nu.weights[d < BALL * s].sum())
        small = float(nu.weights[d < OUTER * s].sum())
        ratios.append(big / small if small > 0 else np.inf)
        if big <= b * small:
            I1.append(idx)
            m1 += float(nu.weights[p.members].sum())
        else:
            I2.append(idx)
    m_omega = float(nu.weights[W.omega].sum())
    return DoublingClassification(I1, I2, float(b), m1, m_omega, bool(m1 >= 0.5 * m_omega), ratios)


def doubling_reference(W: WhitneyDecomposition, M: FiniteMetricSpace, max_centers: int = 16) -> dict:
    """Doubling constant of M at the decomposition's ball scales, for comparison with the overlap.

    Radii are ``16 * 8^-k_i`` and twice that; centers are up to ``max_centers``
    piece centers, spread evenly over the piece list.
    """
    if not W.pieces:
        return {"C_D": 1, "exact": True, "overlap": 0, "within": True, "C_D_power20": 1, "within_power": True}
    pick = np.unique(np.linspace(0, len(W.pieces) - 1, min(max_centers, len(W.pieces))).astype(int))
    centers = [W.pieces[i].center for i in pick]
    ks = sorted({p.k for p in W.pieces})
    radii = np.array([BALL * _scale(k) * m for k in ks for m in (1.0, 2.0)])
    est = doubling_constant(M, radii, centers=centers)
    # balls meeting B(x, 16 s) sit in B(x, 1024 s) with disjoint s/1024-balls inside: 2^20 ratio
    power = int(est.value) ** 20
    return {"C_D": int(est.value), "exact": bool(est.exact), "overlap": W.overlap_pointwise,
            "within": bool(W.overlap_pointwise <= est.value), "C_D_power20": power,
            "within_power": bool(W.overlap_intersections <= power)}


def instance_suite(count: int = 100, seed: int = 0, max_points: int = 2000):
    """Seeded (space, omega, label) instances: grids, perturbed grids and curve samples.

    Omega is the complement of a random ball, a random half-plane side, or a
    random ball itself, always a proper nonempty subset.
    """
    out = []
    for j in range(count):
        g = rng(seed, j)
        kind = ("grid", "perturbed", "curve")[j % 3]
        if kind == "grid":
            side = int(g.integers(8, 40))
            xs = np.arange(side, dtype=float) / side
            pts = np.array([[a, b] for a in xs for b in xs])
        elif kind == "perturbed":
            side = int(g.integers(8, 40))
            xs = np.arange(side, dtype=float) / side
            pts = np.array([[a, b] for a in xs for b in xs])
            pts = pts + g.uniform(-0.3, 0.3, pts.shape) / side
        else:
            K = int(g.integers(64, max_points))
            t = np.arange(K) / K * 2 * np.pi
            wob = g.uniform(0, 0.3)
            r = 1 + wob * np.sin(int(g.integers(1, 6)) * t)
            pts = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
        pts = pts[:max_points]
        M = FiniteMetricSpace(coords=pts)
        mode = j % 4
        c = pts[int(g.integers(len(pts)))]
        diam = M.diameter()
        if mode in (0, 1):
            omega = np.linalg.norm(pts - c, axis=1) >= g.uniform(0.05, 0.4) * diam
        elif mode == 2:
            u = g.normal(size=2)
            omega = (pts - c) @ u > 0
        else:
            omega = np.linalg.norm(pts - c, axis=1) < g.uniform(0.1, 0.5) * diam
        if omega.all():
            omega[int(g.integers(len(pts)))] = False
        if not omega.any():
            omega[int(g.integers(len(pts)))] = True
        out.append((M, omega, f"{kind}-{j}"))
    return out
