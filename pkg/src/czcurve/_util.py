"""Small shared helpers: estimates with exactness flags, seeding, grids."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class Estimate:
    """A numeric result together with a flag telling whether it is exact.

    ``exact=False`` means the value is an upper (or lower) bound obtained
    by a heuristic or a subsample; ``note`` says which.
    """

    value: float
    exact: bool = True
    note: str = ""


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    iterations: int
    converged: bool
    vector: np.ndarray = field(repr=False, default=None)


def rng(seed, *key) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by ``seed`` and an optional path.

    Sub-streams for ensemble member ``i`` are ``rng(seed, i)``; they do not
    depend on how many other members are drawn or in which order.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def thread_count() -> int:
    raw = os.environ.get("CZCURVE_THREADS", "0").strip() or "0"
    n = int(raw)
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def ordered_map(func, items):
    """Map over ``items`` in parallel threads, returning results in input order."""
    items = list(items)
    workers = min(thread_count(), max(len(items), 1))
    if workers <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))


def log_radius_grid(r_min: float, r_max: float, per_octave: int = 16) -> np.ndarray:
    """Radii ``r_min * 2**(j/per_octave)`` up to ``r_max``, with ``r_max`` appended."""
    if not r_min > 0:
        raise ValidationError("r_min must be positive")
    if r_max < r_min:
        raise ValidationError("r_max must be >= r_min")
    steps = int(np.floor(per_octave * np.log2(r_max / r_min) + 1e-12))
    grid = r_min * 2.0 ** (np.arange(steps + 1) / per_octave)
    grid = grid[grid <= r_max]
    if grid[-1] < r_max:
        grid = np.append(grid, r_max)
    return grid


def power_iteration(matvec, rmatvec, size: int, tol: float = 1e-8, max_iter: int = 10_000,
                    seed: int = 0) -> PowerIterationResult:
    """Largest singular value of a linear map by power iteration on A^T A.

    The stopping rule extrapolates the geometric decay of successive
    changes (Aitken) so that the *remaining* error, not the last step,
    is below ``tol`` relative.
    """
    v = rng(seed, 0x5EED).standard_normal(size)
    nv = np.linalg.norm(v)
    v /= nv
    old = 0.0
    dold = None
    sig = 0.0
    for it in range(1, max_iter + 1):
        w = matvec(v)
        sig = float(np.linalg.norm(w))
        if sig == 0.0:
            return PowerIterationResult(0.0, it, True, v)
        u = rmatvec(w)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return PowerIterationResult(sig, it, True, v)
        v = u / nu
        d = abs(sig - old)
        if d == 0.0:
            return PowerIterationResult(sig, it, True, v)
        if dold is not None and d < dold:
            ratio = d / dold
            if d * ratio / (1.0 - ratio) <= 0.1 * tol * sig:
                return PowerIterationResult(sig, it, True, v)
        dold = d
        old = sig
    return PowerIterationResult(sig, max_iter, False, v)
