"""Good-lambda machinery: level sets, the distributional inequality, its
pointwise localization step, and the passage to L^p bounds.

Notation: ``T`` holds ``T_{nu,*} f`` and ``Mf`` holds ``M_nu f`` at every
point of ``nu.space``. Level sets are strict (``T > lam``); the maximal
condition is non-strict (``Mf <= delta lam``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import ValidationError, rng
from .curve import (append_ray, bilipschitz_violations, check_injective, choose_big_piece, curve_regularity,
                    discretize_H1, fit_metadata, flatness_check, make_curve, normalize_curve)
from .kernel import Kernel, kernel_from_config
from .sio import SingularIntegral, maximal_function_all, weak11_constant
from .space import DiscreteMeasure
from .whitney import ChristCubeTree, WhitneyDecomposition, christ_cubes, classify_doubling, whitney_decompose

WITNESS_RADIUS = 322.0
B_RADIUS = 324.0
LOCAL_RADIUS = 4.0
MAX_EPS_HALVINGS = 40


# ---------------------------------------------------------------- constants

@dataclass(frozen=True)
class Constant:
    """A number used by the chain together with the stage that produced it."""

    value: float
    provenance: str

    def to_json(self) -> dict:
        return {"value": self.value, "provenance": self.provenance}


def level_set(values, nu: DiscreteMeasure, lam: float):
    """``Omega_lam = {x in supp(nu) : values > lam}`` as a mask, and its nu-mass."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(nu),):
        raise ValidationError("need one value per point of the space")
    mask = (values > lam) & (nu.weights > 0)
    return mask, float(nu.weights[mask].sum())


def pointwise_constant(C_K: float, C_nu: float, n: int, beta: float) -> dict:
    """The constant bounding the near and Hoelder-transfer terms by ``C M f(x)``.

    ``C = max(162^n C_K C_nu, C_K C_nu 2^n / (2^beta - 1))``. The same two
    steps redone with the distance bound ``d(x, y) > 2 s`` off the small ball,
    the containment ``2B subset B(x, 972 s)`` and ``M f(z) -> M f(x)`` at
    radii >= 2R cost ``486^n`` and a factor ``1.25^n`` respectively; that
    version is reported as ``C_rigorous``.
    """
    for name, v in (("C_K", C_K), ("C_nu", C_nu), ("beta", beta)):
        if not v > 0:
            raise ValidationError(f"{name} must be positive")
    near = 162.0 ** n * C_K * C_nu
    transfer = C_K * C_nu * 2.0 ** n / (2.0 ** beta - 1.0)
    near_r = 486.0 ** n * C_K * C_nu
    transfer_r = 1.25 ** n * transfer
    return {"C": max(near, transfer), "near": near, "transfer": transfer,
            "C_rigorous": max(near_r, transfer_r), "near_rigorous": near_r, "transfer_rigorous": transfer_r}


def delta_from_epsilon(eps: float, theta: float, c: float, C_D: float, C_pointwise: float) -> float:
    """``delta = min(0.99 eps / (4 C), eps theta / (8 c C_D))``."""
    for name, v in (("eps", eps), ("theta", theta), ("c", c), ("C_D", C_D), ("C_pointwise", C_pointwise)):
        if not v > 0:
            raise ValidationError(f"{name} must be positive, got {v!r}")
    return min(0.99 * eps / (4.0 * C_pointwise), eps * theta / (8.0 * c * C_D))


def feasibility_threshold(p: float, theta: float) -> float:
    """Sup of eps with ``(1 + eps)^-p > 1 - theta/4``, i.e. ``(1 - theta/4)^(-1/p) - 1``."""
    if not p > 1:
        raise ValidationError("p must exceed 1")
    if not 0 < theta <= 1:
        raise ValidationError("theta must lie in (0, 1]")
    return (1.0 - theta / 4.0) ** (-1.0 / p) - 1.0


def is_feasible(eps: float, p: float, theta: float) -> bool:
    return bool((1.0 + eps) ** (-p) > 1.0 - theta / 4.0)


# ---------------------------------------------------------------- distributional inequality

@dataclass
class GoodLambdaRow:
    lam: float
    eps: float
    delta: float
    mass_omega: float
    mass_bad: float
    bound: float
    passed: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def goodlambda_check(nu: DiscreteMeasure, T, Mf, lam: float, eps: float, delta: float, theta: float) -> GoodLambdaRow:
    """``nu{T > (1+eps) lam, Mf <= delta lam} <= (1 - theta/4) nu(Omega_lam)``, both sides exact sums."""
    T = np.asarray(T, dtype=float)
    Mf = np.asarray(Mf, dtype=float)
    _, m_omega = level_set(T, nu, lam)
    bad = (T > (1.0 + eps) * lam) & (Mf <= delta * lam) & (nu.weights > 0)
    m_bad = float(nu.weights[bad].sum())
    bound = (1.0 - theta / 4.0) * m_omega
    return GoodLambdaRow(float(lam), float(eps), float(delta), m_omega, m_bad, bound, bool(m_bad <= bound))


def lambda_grid(T, nu: DiscreteMeasure, count: int = 50) -> np.ndarray:
    """``count`` quantile levels of T over the support, ascending."""
    vals = np.asarray(T, dtype=float)[nu.weights > 0]
    if count <= 0:
        return np.zeros(0)
    q = np.arange(1, count + 1) / (count + 1)
    return np.quantile(vals, q, method="lower")


# ---------------------------------------------------------------- localization

@dataclass
class LocalizationReport:
    x: int
    piece: int
    k: int
    lam: float
    eps: float
    delta: float
    qualifies: bool
    passed: bool
    value: float = np.nan
    threshold: float = np.nan
    witness: int | None = None
    hypothesis_violation: str | None = None
    terms: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["terms"] = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.terms.items()}
        return out


@dataclass
class Instance:
    """Kernel, measure and one f with their ``T_* f`` and ``M f`` tables."""

    K: Kernel
    nu: DiscreteMeasure
    f: np.ndarray
    op: SingularIntegral
    T: np.ndarray
    Mf: np.ndarray
    C_nu: float
    n: int = 1

    @classmethod
    def build(cls, K: Kernel, nu: DiscreteMeasure, f, C_nu: float, n: int = 1, op: SingularIntegral | None = None):
        f = np.asarray(f, dtype=float)
        op = op or SingularIntegral(K, nu)
        T = op.maximal(f)
        Mf = np.zeros(len(nu))
        supp = nu.support
        Mf[supp] = maximal_function_all(nu, f, supp)
        return cls(K, nu, f, op, T, Mf, float(C_nu), n)


def localization_check(inst: Instance, W: WhitneyDecomposition, piece: int, x: int,
                       lam: float, eps: float, delta: float) -> LocalizationReport:
    """Check that ``T_*(chi_{B(x_i, 4 s)} f)(x) > eps lam / 2`` for x in piece i, ``s = 8^-k_i``.

    Vacuous unless ``T f(x) > (1 + eps) lam`` and ``M f(x) <= delta lam``.
    The three intermediate bounds are reported with their slacks:
    the annulus term ``T_*(chi_{2B minus 2B_2} f)(x)``, the far term at the
    witness ``T_*(chi_{S minus 2B} f)(z) <= lam`` and the transfer
    ``T_*(chi_{S minus 2B} f)(x) - T_*(chi_{S minus 2B} f)(z)``, with
    ``2B_2 = B(x_i, 4 s)``, ``B = B(z, 324 s)`` and z a point outside
    ``Omega_lam`` within ``322 s`` of ``x_i``.
    """
    p = W.pieces[piece]
    if x not in set(p.members.tolist()):
        raise ValidationError(f"point {x} is not in piece {piece}")
    T, Mf, f, nu = inst.T, inst.Mf, inst.f, inst.nu
    rep = LocalizationReport(int(x), int(piece), int(p.k), float(lam), float(eps), float(delta), False, True)
    if not (T[x] > (1.0 + eps) * lam and Mf[x] <= delta * lam):
        return rep
    rep.qualifies = True
    s = 8.0 ** (-p.k)
    D = nu.space
    d0 = D.row(p.center)
    dx = D.row(x)
    supp = nu.weights > 0
    small = d0 < LOCAL_RADIUS * s
    rep.value = float(inst.op.maximal(np.where(small, f, 0.0), [x])[0])
    rep.threshold = eps * lam / 2.0
    rep.passed = bool(rep.value > rep.threshold)
    outside = supp & ~(T > lam)
    cand = np.flatnonzero(outside & (d0 < WITNESS_RADIUS * s))
    if cand.size == 0:
        rep.hypothesis_violation = "no point outside the level set within 322 s of the piece center"
        return rep
    z = int(cand[np.argmin(d0[cand])])
    rep.witness = z
    dz = D.row(z)
    big2 = dz < 2 * B_RADIUS * s
    K, n, C_nu = inst.K, inst.n, inst.C_nu
    w, absf = nu.weights, np.abs(f)
    ann = big2 & ~small
    far = ~big2
    term1 = float(inst.op.maximal(np.where(ann, f, 0.0), [x])[0])
    with np.errstate(divide="ignore"):
        int1 = K.B * float(np.sum(np.where(ann & (dx > 0), absf * w / np.where(dx > 0, dx, 1.0) ** n, 0.0)))
    ball_x = float(np.sum(w[dx < 972 * s]))
    f_ball_x = float(np.sum((absf * w)[dx < 972 * s]))
    local1 = K.B * f_ball_x / (2 * s) ** n
    mass1 = K.B * ball_x * Mf[x] / (2 * s) ** n
    stated1 = 162.0 ** n * K.B * C_nu * Mf[x]
    gfar = np.where(far, f, 0.0)
    term2 = float(inst.op.maximal(gfar, [z])[0])
    far_x = float(inst.op.maximal(gfar, [x])[0])
    term3 = far_x - term2
    kx = K.two_point(D.coords[x][None, :], D.coords[far])
    kz = K.two_point(D.coords[z][None, :], D.coords[far])
    int3 = float(np.sum(np.abs(kx - kz) * (absf * w)[far]))
    dxz = float(dx[z])
    holder3 = K.B * dxz ** K.beta * float(np.sum((absf * w)[far] / dz[far] ** (n + K.beta)))
    stated3 = K.B * C_nu * 2.0 ** n / (2.0 ** K.beta - 1.0) * Mf[x]
    rep.terms = {
        "T_f_x": float(T[x]), "M_f_x": float(Mf[x]), "d_x_z": dxz,
        "annulus": term1, "annulus_integral": int1, "annulus_local": local1, "annulus_mass": mass1,
        "annulus_bound": stated1, "annulus_slack": stated1 - term1,
        "annulus_chain_ok": bool(term1 <= int1 * (1 + 1e-12) and int1 <= local1 * (1 + 1e-12)
                                 and local1 <= mass1 * (1 + 1e-12)),
        "far_at_witness": term2, "far_bound": float(lam), "far_slack": float(lam) - term2,
        "far_ok": bool(term2 <= lam * (1 + 1e-12)),
        "transfer": term3, "transfer_integral": int3, "transfer_holder": holder3,
        "transfer_bound": stated3, "transfer_slack": stated3 - term3,
        "transfer_chain_ok": bool(term3 <= int3 * (1 + 1e-12) + 1e-300 and int3 <= holder3 * (1 + 1e-12)),
        "split_ok": bool(T[x] <= (rep.value + term1 + far_x) * (1 + 1e-12) + 1e-300),
    }
    return rep


def piece_of(W: WhitneyDecomposition, n_points: int) -> np.ndarray:
    owner = np.full(n_points, -1)
    for i, p in enumerate(W.pieces):
        owner[p.members] = i
    return owner


# ---------------------------------------------------------------- L^p

@dataclass
class LpReport:
    p: float
    eps: float | None
    delta: float | None
    eta: float
    feasible: bool
    norm_T: float
    norm_M: float
    norm_f: float
    bound_T: float
    A_p: float
    ratio_empirical: float
    layer_cake_error: float
    chain_ok: bool
    note: str = ""

    def to_json(self) -> dict:
        return dict(self.__dict__)


def truncate(T, m: float) -> np.ndarray:
    """``g_m = min(m, T)``."""
    return np.minimum(float(m), np.asarray(T, dtype=float))


def pnorm_p(values, nu: DiscreteMeasure, p: float) -> float:
    return float(np.sum(nu.weights * np.abs(np.asarray(values, dtype=float)) ** p))


def layer_cake(values, nu: DiscreteMeasure, p: float) -> float:
    """``int p lam^(p-1) nu{g > lam} dlam`` as a finite sum over the distinct values of g >= 0."""
    g = np.abs(np.asarray(values, dtype=float))
    w = nu.weights
    sel = w > 0
    g, w = g[sel], w[sel]
    v, inv = np.unique(g, return_inverse=True)
    mass_at = np.bincount(inv, weights=w, minlength=v.size)
    tail = np.cumsum(mass_at[::-1])[::-1]   # nu{g >= v_j}
    prev = np.concatenate([[0.0], v[:-1]])
    return float(np.sum((v ** p - prev ** p) * tail))


def lp_from_goodlambda(T, Mf, nu: DiscreteMeasure, p: float, eps_grid, theta: float, delta_of, f=None,
                       m_cap: float | None = None) -> LpReport:
    """``||T_* f||_p`` bound from the good-lambda inequality.

    With ``eta = 1 - theta/4`` and ``g_m = min(m, T)``:
    ``(1+eps)^-p ||g_m||_p^p <= eta ||g_m||_p^p + delta^-p ||M f||_p^p``,
    so ``||g_m||_p <= ||M f||_p / (delta ((1+eps)^-p - eta)^(1/p))`` for every m.
    ``delta_of`` maps eps to delta. The grid is extended by halving its
    smallest entry until some eps is feasible; the eps giving the smallest
    bound is used. ``A_p`` is the bound divided by ``||f||_p`` when f is given.
    """
    if not p > 1:
        raise ValidationError("p must exceed 1")
    T = np.asarray(T, dtype=float)
    Mf = np.asarray(Mf, dtype=float)
    m = float(T.max()) if m_cap is None else float(m_cap)
    g = truncate(T, m)
    gp = pnorm_p(g, nu, p)
    lc = layer_cake(g, nu, p)
    lc_err = abs(lc - gp) / gp if gp > 0 else abs(lc)
    Mp = pnorm_p(Mf, nu, p)
    fp = pnorm_p(f, nu, p) ** (1 / p) if f is not None else np.nan
    eta = 1.0 - theta / 4.0
    grid = sorted(float(e) for e in eps_grid)
    extended = False
    for _ in range(MAX_EPS_HALVINGS):
        if any(is_feasible(e, p, theta) for e in grid):
            break
        grid.insert(0, grid[0] / 2)
        extended = True
    feasible = [e for e in grid if is_feasible(e, p, theta)]
    if not feasible:
        return LpReport(p, None, None, eta, False, gp ** (1 / p), Mp ** (1 / p), fp, np.inf, np.inf,
                        np.nan, lc_err, False, "infeasible: no eps on the grid with (1+eps)^-p > 1 - theta/4")
    if gp == 0:
        return LpReport(p, feasible[-1], float(delta_of(feasible[-1])), eta, True, 0.0, Mp ** (1 / p), fp,
                        0.0, 0.0, 0.0, lc_err, True, "T_* f vanishes")
    best = None
    for e in feasible:
        d = float(delta_of(e))
        bound = (Mp / (d ** p * ((1 + e) ** (-p) - eta))) ** (1 / p)
        if best is None or bound < best[2]:
            best = (e, d, bound)
    e, d, bound = best
    chain = (1 + e) ** (-p) * gp <= (eta * gp + d ** (-p) * Mp) * (1 + 1e-12)
    A = bound / fp if f is not None and fp > 0 else bound
    emp = gp ** (1 / p) / fp if f is not None and fp > 0 else np.nan
    note = "eps grid extended by halving" if extended else ""
    return LpReport(p, e, d, eta, True, gp ** (1 / p), Mp ** (1 / p), fp, float(bound), float(A), float(emp),
                    float(lc_err), bool(chain), note)


# ---------------------------------------------------------------- pipeline

DEFAULT_CONFIG = {
    "seed": 0,
    "curve": {"name": "circle", "K": 512},
    "kernel": {"kind": "riesz", "coord": 1, "p": 2},
    "measure": {"ray": True, "v0": [1.0, 0.0], "S_max": 3.5},
    "ensemble": {"size": 4, "seed": 0},
    "p": [2.0],
    "eps_grid": [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625],
    "sweep_eps": [0.25, 0.0625],
    "lambda_quantiles": 50,
    "big_pieces": {"centers": 8, "radii": 4},
    "localization": {"max_points": 50, "explore_delta_factor": 1.0},
}


class StageError(ValidationError):
    def __init__(self, stage: str, msg: str):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage


def f_ensemble(coords: np.ndarray, size: int, seed: int) -> list:
    """Seeded test functions: short random Fourier sums of the coordinates.

    Odd members are multiplied by a Gaussian bump at a random support point
    so that some functions are concentrated.
    """
    out = []
    dim = coords.shape[1]
    for j in range(size):
        g = rng(seed, 7, j)
        freq = g.normal(scale=4.0, size=(3, dim))
        phase = g.uniform(0, 2 * np.pi, 3)
        amp = g.normal(size=3)
        v = (amp[None, :] * np.cos(coords @ freq.T + phase[None, :])).sum(axis=1) + g.normal()
        if j % 2 == 1:
            c = coords[int(g.integers(coords.shape[0]))]
            v = v * np.exp(-np.sum((coords - c) ** 2, axis=1) / (2 * 0.1 ** 2))
        out.append(v)
    return out


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(base[k], v) if isinstance(v, dict) and isinstance(base.get(k), dict) else v
    return out


def run_theorem_pipeline(config: dict) -> dict:
    """Curve checks, big pieces, ray appending, good-lambda sweep and L^p bounds for one configuration."""
    cfg = _merge(DEFAULT_CONFIG, config)
    seed = int(cfg["seed"])
    report: dict = {"config": cfg, "stages": {}, "constants": {}}
    const = report["constants"]

    # curve stage
    try:
        ccfg = dict(cfg["curve"])
        raw = make_curve(ccfg.pop("name"), **ccfg)
        check_injective(raw)
        curve = normalize_curve(raw)
        meta = fit_metadata(curve)
        viol = bilipschitz_violations(curve, meta)
        flat = flatness_check(curve, meta)
    except ValidationError as exc:
        raise StageError("curve", str(exc)) from exc
    mu = discretize_H1(curve)
    reg_curve = curve_regularity(curve, mu)
    report["stages"]["curve"] = {
        "metadata": meta.to_json(), "violations": {k: int(v) for k, v in viol.items()},
        "flatness_ratio": flat.ratio, "flatness_passed": bool(flat.passed), "reg": reg_curve,
        "passed": bool(viol["lower_violations"] == 0 and viol["upper_violations"] == 0 and flat.passed),
    }

    # big pieces on the curve
    bp = cfg["big_pieces"]
    nK = len(curve)
    centers = np.unique(np.linspace(0, nK - 2, int(bp["centers"])).astype(int))
    diam = float(mu.space.dist.max()) if len(mu) <= 4096 else 1.0
    h = float(np.max(curve.space.norm(np.diff(curve.positions, axis=0))))
    radii = np.geomspace(max(64 * h, diam / 16), diam, int(bp["radii"]))
    pieces = []
    try:
        for a in centers:
            for r in radii:
                pieces.append(choose_big_piece(curve, meta, int(a), float(r), measure=mu, reg=reg_curve))
    except ValidationError as exc:
        raise StageError("big_pieces", str(exc)) from exc
    theta_curve = min(pc.theta for pc in pieces)
    report["stages"]["big_pieces"] = {
        "count": len(pieces), "passed": all(pc.passed for pc in pieces), "theta": theta_curve,
        "stated_diameter_violations": int(sum(pc.diam_violations_stated for pc in pieces)),
    }

    # ray stage
    mcfg = cfg["measure"]
    v0 = np.asarray(mcfg["v0"], dtype=float)
    v0 = v0 / curve.space.norm(v0)
    nu, reg_nu, n_ray = append_ray(mu, v0, float(mcfg["S_max"])) if mcfg.get("ray", True) else (mu, reg_curve, 0)
    theta = min(theta_curve, 1.0 / (reg_nu + 1.0)) if n_ray else theta_curve
    report["stages"]["ray"] = {"points": int(n_ray), "reg": reg_nu, "mass": nu.total_mass}
    n_curve = len(mu)

    # kernel stage
    try:
        K = kernel_from_config(cfg["kernel"])
    except (ValidationError, KeyError) as exc:
        raise StageError("kernel", str(exc)) from exc
    if K.space.dimension != curve.space.dimension:
        raise StageError("kernel", "kernel and curve dimensions differ")
    report["stages"]["kernel"] = {"name": K.name, "B": float(K.B), "beta": float(K.beta), "n": K.n}

    const["theta"] = Constant(theta, "big pieces on the curve and the ray ball ratio 1/(reg+1)").to_json()
    const["C_K"] = Constant(float(K.B), "kernel certification").to_json()
    const["C_nu"] = Constant(float(reg_nu), "regularity of the curve-plus-ray measure").to_json()
    ens = cfg["ensemble"]
    fs = f_ensemble(nu.space.coords, int(ens["size"]), int(ens["seed"]))
    op = SingularIntegral(K, nu)
    zero = K.is_zero
    insts = [Instance.build(K, nu, f, reg_nu, K.n, op) for f in fs]

    # weak constant on the big pieces (curve route)
    Gs = [pc.members for pc in pieces]
    if n_ray:
        ray_idx = np.arange(n_curve, len(nu))
        for r in radii:
            ctr = nu.space.coords[ray_idx[len(ray_idx) // 2]]
            dist = nu.space.norm.distances(ctr[None, :], nu.space.coords[ray_idx])[0]
            Gs.append(ray_idx[dist < r])
    c = 0.0
    for inst in insts:
        if np.sum(np.abs(inst.f) * nu.weights) <= 0:
            continue
        for G in Gs:
            mask = np.zeros(len(nu), dtype=bool)
            mask[G] = True
            c = max(c, weak11_constant(inst.T, nu, inst.f, mask))
    c = max(c, np.finfo(float).tiny) if not zero else 1.0
    const["c"] = Constant(c, "measured weak (1,1) constant of T_* restricted to big pieces, curve route").to_json()

    # decompositions for every (f, lam): overlap constant and doubling classes
    tree = christ_cubes(nu.space, seed=seed)
    sweeps = []
    C_D = 1
    half_mass_ok = True
    whitney_ok = True
    L = int(cfg["lambda_quantiles"])
    for j, inst in enumerate(insts):
        lams = lambda_grid(inst.T, nu, L) if not zero else np.zeros(0)
        lams = lams[lams > 0]
        decs = []
        for lam in lams:
            omega, _ = level_set(inst.T, nu, lam)
            if not omega.any() or omega[nu.support].all():
                decs.append(None)
                continue
            W = whitney_decompose(tree, omega)
            cl = classify_doubling(W, nu)
            whitney_ok &= W.ok
            half_mass_ok &= cl.half_mass_ok
            C_D = max(C_D, W.overlap_pointwise)
            decs.append(W)
        sweeps.append((lams, decs))
    const["C_D"] = Constant(float(C_D), "max pointwise overlap over all decompositions of the sweep").to_json()
    report["stages"]["whitney"] = {"tree_levels": [tree.k_min, tree.k_max], "all_properties": bool(whitney_ok),
                                   "half_mass": bool(half_mass_ok), "C_D": C_D}
    pc_ = pointwise_constant(float(K.B), reg_nu, K.n, float(K.beta)) if not zero else {"C": 1.0, "C_rigorous": 1.0}
    const["C_pointwise"] = Constant(pc_["C"], "max of 162^n C_K C_nu and C_K C_nu 2^n/(2^beta-1)").to_json()
    const["C_pointwise_rigorous"] = Constant(pc_["C_rigorous"], "486^n and 1.25^n corrected chain").to_json()

    def delta_of(e):
        return delta_from_epsilon(e, theta, c, C_D, pc_["C"])

    rows, loc, loc_explore = [], [], []
    lcfg = cfg["localization"]
    for j, (inst, (lams, decs)) in enumerate(zip(insts, sweeps)):
        for e in cfg["sweep_eps"]:
            d = delta_of(e)
            for lam, W in zip(lams, decs):
                row = goodlambda_check(nu, inst.T, inst.Mf, lam, e, d, theta)
                rows.append({"f": j, **row.to_json()})
                if W is None:
                    continue
                for dd, bucket in ((d, loc), (float(lcfg["explore_delta_factor"]) * e, loc_explore)):
                    if len(bucket) >= int(lcfg["max_points"]):
                        continue
                    q = np.flatnonzero((inst.T > (1 + e) * lam) & (inst.Mf <= dd * lam) & (nu.weights > 0))
                    if q.size == 0:
                        continue
                    owner = piece_of(W, len(nu))
                    for x in q[: int(lcfg["max_points"]) - len(bucket)]:
                        bucket.append({"f": j, **localization_check(inst, W, int(owner[x]), int(x), lam, e, dd).to_json()})
    fails = sum(not r["passed"] for r in rows)
    report["goodlambda"] = {"rows": rows, "violations": int(fails), "checked": len(rows)}
    report["localization"] = {
        "formula_delta": {"points": len(loc), "passed": sum(r["passed"] for r in loc),
                          "hypothesis_violations": sum(r["hypothesis_violation"] is not None for r in loc),
                          "reports": loc},
        "exploratory_delta": {"points": len(loc_explore), "passed": sum(r["passed"] for r in loc_explore),
                              "hypothesis_violations": sum(r["hypothesis_violation"] is not None for r in loc_explore),
                              "reports": loc_explore},
    }

    lp = {}
    for p in cfg["p"]:
        reps = [lp_from_goodlambda(inst.T, inst.Mf, nu, float(p), cfg["eps_grid"], theta, delta_of, inst.f)
                for inst in insts]
        A = max(r.A_p for r in reps) if reps else 0.0
        lp[str(float(p))] = {"A_p": float(A), "per_f": [r.to_json() for r in reps],
                             "feasibility_threshold": feasibility_threshold(float(p), theta)}
    report["lp"] = lp
    const["eta"] = Constant(1.0 - theta / 4.0, "1 - theta/4").to_json()
    for e in cfg["sweep_eps"]:
        const[f"delta_sweep_eps{float(e)!r}"] = Constant(delta_of(e), f"delta at sweep eps={float(e)!r}").to_json()
    for p, block in lp.items():
        first = block["per_f"][0] if block["per_f"] else None
        if first and first["feasible"]:
            const[f"eps_p{p}"] = Constant(first["eps"], "eps on the extended grid minimizing the L^p bound").to_json()
            const[f"delta_p{p}"] = Constant(first["delta"], "delta at that eps").to_json()
    report["passed"] = bool(report["stages"]["curve"]["passed"] and report["stages"]["big_pieces"]["passed"]
                            and whitney_ok and half_mass_ok and fails == 0
                            and all(np.isfinite(v["A_p"]) for v in lp.values()))
    return report
