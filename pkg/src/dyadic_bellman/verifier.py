"""Numerical verification of the inequalities behind the Bellman candidates.

The split functionals U, V, W, P are evaluated on lattices and random
samples of the configuration domain

    omega_L = {1 <= s-, s+ <= L,  (s- + s+)/2 <= s <= L}

(``L = inf`` gives omega_inf, truncated for sweeps).  Differences of
candidate values are always formed through ``candidate_increment`` so that
the rounding error scales with the size of the increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bellman_eval import K_alpha_info, a_f_eval, A_Lf_eval, candidate_increment
from .dyadic_core import (
    DyadicInterval,
    DyadicWeight,
    a2_characteristic,
    carleson_coefficients,
    local_norm,
    maximal_levels,
    _level_means,
)
from .exceptions import PreconditionError, ResourceError
from .extremal_weights import AfOptimizerParams, AlfOptimizerParams, af_sum_analytic, alf_sigma_solve
from .phi_spec import PhiSpec, eval_h, eval_phi

FORMULA_TOL = 1e-12
CHAINED_TOL = 1e-10
LATTICE_CAP = 200
RANDOM_CAP = 10**6
RANDOM_CHUNK = 2**16
OMEGA_TOL = 1e-12
V_W_TRUNCATION = 3.0

# functional -> (candidate, claim, bounded domain)
FUNCTIONALS = {
    "U": ("alf", "min", True),
    "V": ("af", "min", False),
    "W": ("af", "max", False),
    "P_upper": ("alf", "min", True),
    "P_lower": ("af", "max", True),
}


@dataclass(frozen=True)
class OmegaLPoint:
    s_minus: float
    s_plus: float
    s: float
    L: float = math.inf

    def __post_init__(self):
        top = self.L * (1 + OMEGA_TOL)
        lo = 1 - OMEGA_TOL
        if not (lo <= self.s_minus <= top and lo <= self.s_plus <= top):
            raise PreconditionError(f"s-, s+ must lie in [1, {self.L}]")
        if not 0.5 * (self.s_minus + self.s_plus) <= self.s * (1 + OMEGA_TOL) or self.s > top:
            raise PreconditionError("need (s- + s+)/2 <= s <= L")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.s_minus, self.s_plus, self.s)


@dataclass
class VerificationReport:
    functional: str
    grid_spec: dict
    extremal_value: float
    witness: tuple
    passed: bool
    samples: int
    tolerance: float
    claim: str = ""
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "functional": self.functional,
            "passed": bool(self.passed),
            "extremal": float(self.extremal_value),
            "witness": [float(v) if isinstance(v, (float, np.floating)) else v for v in self.witness],
            "samples": int(self.samples),
            "tolerance": self.tolerance,
            "claim": self.claim,
            "grid": self.grid_spec,
            "extras": self.extras,
        }


# -- functionals --------------------------------------------------------------


def _split_terms(phi, cand, L, sm, sp, s):
    dm = candidate_increment(phi, cand, s, sm, L)
    dp = candidate_increment(phi, cand, s, sp, L)
    return 0.5 * dm + 0.5 * dp, eval_h(phi, s)


def U_values(phi: PhiSpec, L: float, sm, sp, s):
    base, h = _split_terms(phi, "alf", L, sm, sp, s)
    return base - 8 * h * (s * s - sm * sp)


def V_values(phi: PhiSpec, sm, sp, s):
    base, h = _split_terms(phi, "af", None, sm, sp, s)
    return base - 8 * h * (s * s - sm * sp)


def W_values(phi: PhiSpec, sm, sp, s):
    base, h = _split_terms(phi, "af", None, sm, sp, s)
    return base - 4 * h * ((s - sm) * (s + sm) + (s - sp) * (s + sp))


def P_values(phi: PhiSpec, candidate: str, L: float | None, sm, sp, s):
    base, h = _split_terms(phi, candidate, L, sm, sp, s)
    q = (sm - sp) * (sm + sp)
    return base - h * (4 * ((s - sm) * (s + sm) + (s - sp) * (s + sp)) + q * q / (s * s))


def _pt(p: OmegaLPoint):
    return p.s_minus, p.s_plus, p.s


def eval_U(phi: PhiSpec, L: float, p: OmegaLPoint) -> float:
    if p.L > L * (1 + OMEGA_TOL):
        raise PreconditionError("point outside omega_L")
    return float(U_values(phi, L, *_pt(p)))


def eval_V(phi: PhiSpec, p: OmegaLPoint) -> float:
    return float(V_values(phi, *_pt(p)))


def eval_W(phi: PhiSpec, p: OmegaLPoint) -> float:
    return float(W_values(phi, *_pt(p)))


def eval_P(candidate: str, phi: PhiSpec, L: float | None, p: OmegaLPoint) -> float:
    if candidate not in ("af", "alf"):
        raise PreconditionError("candidate must be 'af' or 'alf'")
    return float(P_values(phi, candidate, L, *_pt(p)))


def _functional_fn(name: str, phi: PhiSpec, L: float):
    if name == "U":
        return lambda a, b, c: U_values(phi, L, a, b, c)
    if name == "V":
        return lambda a, b, c: V_values(phi, a, b, c)
    if name == "W":
        return lambda a, b, c: W_values(phi, a, b, c)
    if name == "P_upper":
        return lambda a, b, c: P_values(phi, "alf", L, a, b, c)
    if name == "P_lower":
        return lambda a, b, c: P_values(phi, "af", None, a, b, c)
    raise PreconditionError(f"unknown functional {name!r}; choose from {sorted(FUNCTIONALS)}")


# -- sweeps -------------------------------------------------------------------


class _Tracker:
    """Keeps the extremal value and the first point (in scan order) attaining it."""

    def __init__(self, claim: str):
        self.sign = 1.0 if claim == "min" else -1.0
        self.best = math.inf
        self.witness = None
        self.count = 0

    def update(self, vals: np.ndarray, pts: tuple[np.ndarray, ...]):
        if vals.size == 0:
            return
        self.count += vals.size
        j = int(np.argmin(self.sign * vals))
        v = float(self.sign * vals[j])
        if v < self.best:
            self.best = v
            self.witness = tuple(float(p[j]) for p in pts)

    @property
    def value(self) -> float:
        return self.sign * self.best


def sweep(
    functional: str,
    phi: PhiSpec,
    L: float,
    grid: int = 50,
    mode: str = "lattice",
    seed: int = 0,
    count: int = 0,
    truncation: float = V_W_TRUNCATION,
    tolerance: float = FORMULA_TOL,
    slice: str | None = None,
) -> VerificationReport:
    """Extremum of a split functional over omega_L (or truncated omega_inf).

    ``lattice`` mode scans the uniform grid with ``grid`` nodes per axis and
    skips nodes with (s- + s+)/2 > s; ``random`` mode draws ``count``
    admissible points from a generator keyed by (seed, chunk).  ``slice``
    restricts to s = (s- + s+)/2 (``"midpoint"``) or to s- = s+
    (``"diagonal"``).
    """
    cand, claim, bounded = FUNCTIONALS.get(functional, (None, None, None))
    if cand is None:
        raise PreconditionError(f"unknown functional {functional!r}; choose from {sorted(FUNCTIONALS)}")
    if not L >= 1:
        raise PreconditionError("L must be >= 1")
    top = float(L) if bounded else float(truncation * L)
    fn = _functional_fn(functional, phi, L)
    track = _Tracker(claim)
    if mode == "lattice":
        if grid < 2:
            raise PreconditionError("grid counts must be >= 2")
        if grid > LATTICE_CAP:
            raise ResourceError(f"grid {grid} exceeds the lattice cap {LATTICE_CAP}")
        axis = np.linspace(1.0, top, grid)
        idx = np.arange(grid)
        jj, kk = np.meshgrid(idx, idx, indexing="ij")
        for i in range(grid):
            ok = i + jj <= 2 * kk
            if slice == "midpoint":
                ok &= i + jj == 2 * kk
            elif slice == "diagonal":
                ok &= jj == i
            j_ok, k_ok = jj[ok], kk[ok]
            if j_ok.size == 0:
                continue
            sm = np.full(j_ok.size, axis[i])
            sp, s = axis[j_ok], axis[k_ok]
            track.update(np.asarray(fn(sm, sp, s)), (sm, sp, s))
        spec = {"mode": "lattice", "counts": [grid] * 3, "range": [1.0, top], "slice": slice}
    elif mode == "random":
        if count < 1:
            raise PreconditionError("random mode needs count >= 1")
        if count > RANDOM_CAP:
            raise ResourceError(f"count {count} exceeds the random cap {RANDOM_CAP}")
        done, chunk = 0, 0
        while done < count:
            size = min(RANDOM_CHUNK, count - done)
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))
            sm = rng.uniform(1.0, top, size)
            sp = sm.copy() if slice == "diagonal" else rng.uniform(1.0, top, size)
            mid = 0.5 * (sm + sp)
            s = mid if slice == "midpoint" else mid + rng.uniform(0.0, 1.0, size) * (top - mid)
            track.update(np.asarray(fn(sm, sp, s)), (sm, sp, s))
            done += size
            chunk += 1
        spec = {"mode": "random", "seed": seed, "count": count, "range": [1.0, top], "slice": slice}
    else:
        raise PreconditionError("mode must be 'lattice' or 'random'")
    if track.witness is None:
        raise PreconditionError("no admissible points in the sweep")
    ok = track.value >= -tolerance if claim == "min" else track.value <= tolerance
    return VerificationReport(
        functional, spec, track.value, track.witness, bool(ok), track.count, tolerance,
        claim=f"{functional} {'>=' if claim == 'min' else '<='} 0",
        extras={"phi": phi.label, "L": L},
    )


# -- weight-based checks ------------------------------------------------------


def _node_points(w: DyadicWeight, d: int):
    return np.sqrt(np.maximum(w.products(d), 1.0))


def check_induction(w: DyadicWeight, phi: PhiSpec, L: float, side: str = "upper",
                    tolerance: float = CHAINED_TOL) -> VerificationReport:
    """Per-node main inequality for the candidate, and its summed consequence.

    ``upper`` uses A_{L,f}: B(x) - (B(x-) + B(x+))/2 - Phi R >= 0 at every
    node and carleson_sum <= A_{L,f}(root).  ``lower`` uses a_f with both
    signs reversed.
    """
    if side not in ("upper", "lower"):
        raise PreconditionError("side must be 'upper' or 'lower'")
    q = a2_characteristic(w)
    if q > L * L * (1 + 1e-9):
        raise PreconditionError(f"characteristic {q!r} exceeds L**2 = {L * L!r}")
    cand = "alf" if side == "upper" else "af"
    sign = 1.0 if side == "upper" else -1.0
    worst, worst_node = math.inf, DyadicInterval.root()
    total = 0.0
    for d in range(w.depth):
        s = np.minimum(_node_points(w, d), L)
        kids = np.minimum(_node_points(w, d + 1), L)
        sm, sp = kids[0::2], kids[1::2]
        rterm = eval_phi(phi, w.products(d)) * w.r_level(d)
        total += 2.0**-d * float(np.sum(rterm))
        res = (0.5 * candidate_increment(phi, cand, s, sm, L)
               + 0.5 * candidate_increment(phi, cand, s, sp, L) - rterm)
        j = int(np.argmin(sign * res))
        if sign * res[j] < worst:
            worst, worst_node = float(sign * res[j]), DyadicInterval(d, j)
    if w.depth == 0:
        worst = 0.0
    root = float(_node_points(w, 0)[0])
    bound = float(A_Lf_eval(phi, L, min(root, L)) if side == "upper" else a_f_eval(phi, root))
    sum_ok = total <= bound + 1e-9 if side == "upper" else total >= bound - 1e-9
    nodes_ok = worst >= -tolerance
    return VerificationReport(
        f"induction_{side}",
        {"depth": w.depth, "L": L},
        sign * worst,
        (worst_node.depth, worst_node.index),
        bool(nodes_ok and sum_ok),
        2**w.depth - 1,
        tolerance,
        claim="node residuals " + (">= 0" if side == "upper" else "<= 0"),
        extras={"carleson_sum": total, "candidate_at_root": bound, "sum_ok": bool(sum_ok),
                "nodes_ok": bool(nodes_ok), "phi": phi.label},
    )


def _level_mins(leaf: np.ndarray) -> list[np.ndarray]:
    levels = [np.asarray(leaf, dtype=float)]
    while levels[-1].size > 1:
        x = levels[-1]
        levels.append(np.minimum(x[0::2], x[1::2]))
    return levels[::-1]


def _embedding_sides(coeffs: Sequence[np.ndarray], F: np.ndarray) -> tuple[float, float]:
    mins = _level_mins(F)
    lhs = float(sum(np.sum(c * mins[d]) for d, c in enumerate(coeffs)))
    return lhs, float(np.mean(F))


def check_embedding(w: DyadicWeight, phi: PhiSpec, F) -> VerificationReport:
    """sum_J c_J inf_J F <= ||c|| int F for a non-negative step function F."""
    F = np.asarray(F, dtype=float).reshape(-1)
    if F.size != 2**w.depth:
        raise PreconditionError("F must have 2**depth values")
    if np.any(F < 0) or not np.all(np.isfinite(F)):
        raise PreconditionError("F must be finite and non-negative")
    coeffs = carleson_coefficients(w, phi)
    norm, where = local_norm(coeffs)
    lhs, integral = _embedding_sides(coeffs, F)
    rhs = norm * integral
    slack = rhs - lhs
    tol = FORMULA_TOL * max(1.0, abs(rhs))
    return VerificationReport(
        "embedding", {"depth": w.depth}, slack, (where.depth, where.index), bool(slack >= -tol),
        2**w.depth - 1, tol, claim="norm * int F - sum c_J inf_J F >= 0",
        extras={"lhs": lhs, "rhs": rhs, "norm": norm},
    )


def check_leb(w: DyadicWeight, phi: PhiSpec, gamma: float, p: float | None = None) -> VerificationReport:
    """sum_J c_J <w^-1>_J^-gamma <= e B <w^gamma>_(0,1), with B the local norm.

    For gamma > 0 the intermediate bounds of the maximal-function argument
    are also checked with the exponent ``p`` (default max(2, 2/gamma)),
    F = [M(w^(1/p))]^(p gamma).
    """
    if gamma < 0:
        raise PreconditionError("gamma must be >= 0")
    coeffs = carleson_coefficients(w, phi)
    B, _ = local_norm(coeffs)
    lhs = float(sum(np.sum(c * w.avg_winv[d] ** (-gamma)) for d, c in enumerate(coeffs)))
    wg = float(np.mean(w.values**gamma))
    rhs = math.e * B * wg
    tol = FORMULA_TOL * max(1.0, abs(rhs))
    extras = {"lhs": lhs, "rhs": rhs, "norm": B, "avg_w_gamma": wg}
    chain_ok = True
    if gamma > 0 and w.depth > 0:
        p = max(2.0, 2.0 / gamma) if p is None else float(p)
        if not p * gamma > 1:
            raise PreconditionError("need p * gamma > 1")
        means = _level_means(w.values ** (1.0 / p))
        maxf = maximal_levels(means)[-1]
        F = maxf ** (p * gamma)
        mins = _level_mins(F)
        step1 = all(
            np.all(w.avg_winv[d] ** (-gamma) <= means[d] ** (p * gamma) * (1 + 1e-12))
            and np.all(means[d] ** (p * gamma) <= mins[d] * (1 + 1e-12))
            for d in range(w.depth)
        )
        emb_lhs, intF = _embedding_sides(coeffs, F)
        pg = p * gamma
        doob = (pg / (pg - 1)) ** pg
        step2 = lhs <= emb_lhs * (1 + 1e-12) + tol and emb_lhs <= B * intF * (1 + 1e-12) + tol
        step3 = intF <= doob * wg * (1 + 1e-12)
        chain_ok = bool(step1 and step2 and step3)
        extras.update({"p": p, "embedding_lhs": emb_lhs, "int_F": intF,
                       "maximal_constant": doob, "chain_ok": chain_ok})
    slack = rhs - lhs
    return VerificationReport(
        "leb", {"depth": w.depth, "gamma": gamma}, slack, (0, 0), bool(slack >= -tol and chain_ok),
        2**w.depth - 1, tol, claim="e B <w^gamma> - sum c_J <w^-1>^-gamma >= 0", extras=extras,
    )


def check_corr3(w: DyadicWeight, alpha: float, beta: float) -> VerificationReport:
    """sum_J |J| <w>^alpha <w^-1>^beta R_J <= e K_alpha([w]) <w^(alpha - beta)>."""
    if not alpha > beta:
        raise PreconditionError("need alpha > beta")
    lhs = float(sum(
        2.0**-d * np.sum(w.avg_w[d] ** alpha * w.avg_winv[d] ** beta * w.r_level(d))
        for d in range(w.depth)
    ))
    q = a2_characteristic(w)
    K, bound_only = K_alpha_info(alpha, q)
    avg = float(np.mean(w.values ** (alpha - beta)))
    rhs = math.e * K * avg
    slack = rhs - lhs
    tol = FORMULA_TOL * max(1.0, abs(rhs))
    return VerificationReport(
        "corr3", {"depth": w.depth, "alpha": alpha, "beta": beta}, slack, (0, 0),
        bool(slack >= -tol), 2**w.depth - 1, tol,
        claim="e K_alpha <w^(alpha-beta)> - sum c^(alpha,beta) >= 0",
        extras={"lhs": lhs, "rhs": rhs, "characteristic": q, "K_alpha": K, "K_bound_only": bound_only},
    )


# -- convergence --------------------------------------------------------------


@dataclass
class ConvergenceTable:
    kind: str
    target: float
    rows: list[tuple[int, float, float]]  # (n, sum, abs_err)
    step: list[float]
    monotone: bool
    slope: float | None

    @property
    def final_error(self) -> float:
        return self.rows[-1][2]

    def csv_rows(self) -> list[dict]:
        return [{"n": n, "sum": v, "target": self.target, "abs_err": e} for n, v, e in self.rows]


def _loglog_slope(h: Sequence[float], err: Sequence[float]) -> float | None:
    h = np.asarray(h, dtype=float)
    e = np.asarray(err, dtype=float)
    if len(h) < 2 or np.any(e <= 0):
        return None
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def convergence_study(kind: str, phi: PhiSpec, s: float, L: float | None = None,
                      n_list: Sequence[int] = ()) -> ConvergenceTable:
    """Error of the optimizer sums against the candidate value.

    ``af``: n is the number of tangential stages, step 1/n.
    ``alf``: n is the refinement exponent (ladder of 2**(N+n) steps), step
    2**-(N+n); s must be L - m 2**-(N+1) (L - 1).
    """
    rows, step = [], []
    if kind == "af":
        target = float(a_f_eval(phi, s))
        for n in n_list:
            v = af_sum_analytic(AfOptimizerParams(s, int(n)), phi)
            rows.append((int(n), v, abs(v - target)))
            step.append(1.0 / n)
    elif kind == "alf":
        if L is None:
            raise PreconditionError("alf needs L")
        target = float(A_Lf_eval(phi, L, s))
        for n in n_list:
            pr = AlfOptimizerParams.from_target(L, s, int(n))
            v = float(alf_sigma_solve(pr, phi)[pr.k_star])
            rows.append((int(n), v, abs(v - target)))
            step.append(2.0 ** -(pr.N + pr.n))
    else:
        raise PreconditionError("kind must be 'af' or 'alf'")
    if not rows:
        raise PreconditionError("n_list is empty")
    errs = [r[2] for r in rows]
    scale = max(1.0, abs(target))
    monotone = all(b <= a + 1e-14 * scale for a, b in zip(errs, errs[1:]))
    return ConvergenceTable(kind, target, rows, step, monotone, _loglog_slope(step, errs))
