"""Dyadic intervals of (0, 1) and piecewise-constant weights on them.

A weight of depth ``n`` is stored as the dense array of its 2**n values on
the generation-``n`` intervals.  All per-node quantities (averages, Haar
differences, the Carleson coefficients) are computed level by level with
vectorized pairwise reductions, so every operation costs O(2**n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .exceptions import InvalidWeightError, PreconditionError, ResourceError
from .phi_spec import PhiSpec, eval_phi

MAX_DEPTH = 24
DOMAIN_EPS = 1e-9


def _check_depth(depth: int) -> int:
    if int(depth) != depth or depth < 0:
        raise PreconditionError(f"depth must be a non-negative integer, got {depth!r}")
    if depth > MAX_DEPTH:
        raise ResourceError(f"depth {depth} exceeds the cap {MAX_DEPTH}")
    return int(depth)


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval [index 2**-depth, (index + 1) 2**-depth)."""

    depth: int
    index: int

    def __post_init__(self):
        if self.depth < 0 or not 0 <= self.index < 2**self.depth:
            raise PreconditionError(f"invalid dyadic interval ({self.depth}, {self.index})")

    @classmethod
    def root(cls) -> "DyadicInterval":
        return cls(0, 0)

    @property
    def length(self) -> float:
        return 2.0**-self.depth

    @property
    def left(self) -> float:
        return self.index * self.length

    @property
    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (
            DyadicInterval(self.depth + 1, 2 * self.index),
            DyadicInterval(self.depth + 1, 2 * self.index + 1),
        )

    @property
    def parent(self) -> "DyadicInterval | None":
        if self.depth == 0:
            return None
        return DyadicInterval(self.depth - 1, self.index // 2)

    def ancestors(self) -> list["DyadicInterval"]:
        """This interval and all larger dyadic intervals containing it, root last."""
        return [DyadicInterval(d, self.index >> (self.depth - d)) for d in range(self.depth, -1, -1)]


@dataclass(frozen=True, eq=False)
class DyadicWeight:
    depth: int
    values: np.ndarray

    def __post_init__(self):
        depth = _check_depth(self.depth)
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size != 2**depth:
            raise InvalidWeightError(f"depth {depth} needs {2**depth} values, got {vals.size}")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise InvalidWeightError("weight values must be finite and strictly positive")
        vals.setflags(write=False)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, depth: int, value: float = 1.0) -> "DyadicWeight":
        return cls(depth, np.full(2 ** _check_depth(depth), float(value)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicWeight):
            return NotImplemented
        return self.depth == other.depth and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.depth, self.values.tobytes()))

    def __len__(self) -> int:
        return self.values.size

    @cached_property
    def avg_w(self) -> list[np.ndarray]:
        """``avg_w[d][j]`` is the mean of w over interval (d, j)."""
        return _level_means(self.values)

    @cached_property
    def avg_winv(self) -> list[np.ndarray]:
        return _level_means(1.0 / self.values)

    def products(self, d: int) -> np.ndarray:
        """<w><w^-1> on every interval of generation d."""
        return self.avg_w[d] * self.avg_winv[d]

    def r_level(self, d: int) -> np.ndarray:
        """R_J for every interval of generation d < depth."""
        if not 0 <= d < self.depth:
            raise PreconditionError("R_J needs d < depth")
        cw, ci = self.avg_w[d + 1], self.avg_winv[d + 1]
        dw = cw[0::2] - cw[1::2]
        di = ci[0::2] - ci[1::2]
        return (dw / self.avg_w[d]) ** 2 + (di / self.avg_winv[d]) ** 2


def _level_means(leaf: np.ndarray) -> list[np.ndarray]:
    levels = [np.asarray(leaf, dtype=float)]
    while levels[-1].size > 1:
        x = levels[-1]
        levels.append(0.5 * (x[0::2] + x[1::2]))
    return levels[::-1]


@dataclass(frozen=True)
class IntervalStats:
    avg_w: float
    avg_winv: float
    delta_w: float
    delta_winv: float
    s: float
    r: float


@dataclass(frozen=True)
class OmegaPoint:
    """A point (x1, x2) with 1 <= x1 x2 <= q, up to ``DOMAIN_EPS``."""

    x1: float
    x2: float
    q: float

    def __post_init__(self):
        if not (self.x1 > 0 and self.x2 > 0):
            raise PreconditionError("x1 and x2 must be positive")
        if self.q < 1:
            raise PreconditionError("q must be >= 1")
        p = self.x1 * self.x2
        if not 1 - DOMAIN_EPS <= p <= self.q + DOMAIN_EPS:
            raise PreconditionError(f"x1*x2 = {p!r} outside [1, {self.q!r}]")

    @property
    def s(self) -> float:
        return math.sqrt(max(1.0, self.x1 * self.x2))


def interval_stats(w: DyadicWeight, J: DyadicInterval) -> IntervalStats:
    if J.depth >= w.depth:
        raise PreconditionError(f"interval depth {J.depth} must be below weight depth {w.depth}")
    d, j = J.depth, J.index
    aw, ai = w.avg_w[d][j], w.avg_winv[d][j]
    dw = w.avg_w[d + 1][2 * j] - w.avg_w[d + 1][2 * j + 1]
    di = w.avg_winv[d + 1][2 * j] - w.avg_winv[d + 1][2 * j + 1]
    return IntervalStats(
        avg_w=float(aw),
        avg_winv=float(ai),
        delta_w=float(dw),
        delta_winv=float(di),
        s=math.sqrt(max(1.0, aw * ai)),
        r=float((dw / aw) ** 2 + (di / ai) ** 2),
    )


def a2_characteristic(w: DyadicWeight) -> float:
    return max(1.0, max(float(np.max(w.products(d))) for d in range(w.depth + 1)))


def carleson_coefficients(w: DyadicWeight, phi: PhiSpec) -> list[np.ndarray]:
    """``c[d][j] = |J| Phi(<w><w^-1>) R_J`` for every generation d < depth."""
    return [
        2.0**-d * eval_phi(phi, w.products(d)) * w.r_level(d) for d in range(w.depth)
    ]


def sequence_sum(coeffs: Sequence[np.ndarray]) -> float:
    return float(sum(np.sum(c) for c in coeffs))


def carleson_sum(w: DyadicWeight, phi: PhiSpec) -> float:
    """Sum of c_J over all J in (0, 1); deeper terms vanish."""
    return sequence_sum(carleson_coefficients(w, phi))


def local_norm(coeffs: Sequence[np.ndarray]) -> tuple[float, DyadicInterval]:
    """sup_R |R|^-1 sum_{J in R} c_J for a finite dyadic sequence.

    ``coeffs[d]`` holds the 2**d coefficients of generation d (already
    including the |J| factor).  Returns the value and the first interval
    (shallowest, then leftmost) attaining it.
    """
    depth = len(coeffs)
    if depth == 0:
        return 0.0, DyadicInterval.root()
    subtree = np.zeros(2 * coeffs[-1].size)
    best, arg = 0.0, DyadicInterval.root()
    normalized = []
    for d in range(depth - 1, -1, -1):
        subtree = np.asarray(coeffs[d], dtype=float) + subtree[0::2] + subtree[1::2]
        normalized.append(subtree * 2.0**d)
    for d, vals in enumerate(normalized[::-1]):
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, arg = float(vals[j]), DyadicInterval(d, j)
    return best, arg


def carleson_norm_local(w: DyadicWeight, phi: PhiSpec) -> float:
    return local_norm(carleson_coefficients(w, phi))[0]


def carleson_norm_witness(w: DyadicWeight, phi: PhiSpec) -> tuple[float, DyadicInterval]:
    return local_norm(carleson_coefficients(w, phi))


def scale(w: DyadicWeight, tau: float) -> DyadicWeight:
    if not tau > 0:
        raise PreconditionError("tau must be > 0")
    return DyadicWeight(w.depth, w.values * tau)


def concat(w_left: DyadicWeight, w_right: DyadicWeight) -> DyadicWeight:
    if w_left.depth != w_right.depth:
        raise PreconditionError("concat needs equal depths")
    return DyadicWeight(w_left.depth + 1, np.concatenate([w_left.values, w_right.values]))


def dyadic_maximal(g: DyadicWeight, J: DyadicInterval) -> float:
    """max of <g>_R over dyadic R with J inside R inside (0, 1)."""
    if J.depth > g.depth:
        raise PreconditionError("J deeper than g")
    return max(float(g.avg_w[a.depth][a.index]) for a in J.ancestors())


def maximal_levels(level_means: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-level dyadic maximal function: running max of means over ancestors."""
    out = [np.asarray(level_means[0], dtype=float)]
    for m in level_means[1:]:
        out.append(np.maximum(np.repeat(out[-1], 2), m))
    return out


def _first_positive_root(a, b, c):
    """Smallest positive root of a t^2 + b t + c = 0 (inf if none), elementwise."""
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    out = np.full(a.shape, np.inf)
    lin = np.abs(a) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lin = -c / b
    out = np.where(lin & (t_lin > 0) & np.isfinite(t_lin), t_lin, out)
    disc = b * b - 4 * a * c
    ok = ~lin & (disc >= 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    # Numerically stable pair of roots.
    qv = -0.5 * (b + np.copysign(sq, b))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(ok, qv / np.where(a == 0, 1, a), np.inf)
        r2 = np.where(ok & (qv != 0), c / np.where(qv == 0, 1, qv), np.inf)
    for r in (r1, r2):
        out = np.where((r > 0) & (r < out), r, out)
    return out


def random_a2_weight(x: OmegaPoint, depth: int, seed: int) -> DyadicWeight:
    """A random weight with root averages (x1, x2) and characteristic <= q.

    Every node point is split symmetrically along a random direction with a
    random admissible magnitude; the last generation uses the two-step split
    whose leaves sit on x1 x2 = 1, which makes all averages exact.
    """
    depth = _check_depth(depth)
    if depth < 1:
        raise PreconditionError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    q = float(x.q)
    x1 = np.array([x.x1], dtype=float)
    x2 = np.array([x.x2], dtype=float)
    for _ in range(depth - 1):
        theta = rng.uniform(0.0, math.pi, size=x1.size)
        u = rng.uniform(0.0, 1.0, size=x1.size)
        c, sn = np.cos(theta), np.sin(theta)
        # Relative coordinates: g(t) = p (1 + t c)(1 + t sn).
        p = x1 * x2
        a, b = p * c * sn, p * (c + sn)
        t_max = np.full(x1.size, np.inf)
        for sign in (1.0, -1.0):
            for level in (1.0, q):
                t_max = np.minimum(t_max, _first_positive_root(a, sign * b, p - level))
        t_max = np.where(np.isfinite(t_max), t_max, 1.0)
        t = u * np.minimum(t_max, 1.0 / np.maximum(np.abs(c), np.abs(sn)) * 0.999)
        for _ in range(60):
            lo = (1 - t * c) * (1 - t * sn) * p
            hi = (1 + t * c) * (1 + t * sn) * p
            bad = (np.minimum(lo, hi) < 1.0) | (np.maximum(lo, hi) > q)
            if not bad.any():
                break
            t = np.where(bad, 0.5 * t, t)
        t = np.where(bad, 0.0, t)
        x1 = np.stack([x1 * (1 - t * c), x1 * (1 + t * c)], axis=1).reshape(-1)
        x2 = np.stack([x2 * (1 - t * sn), x2 * (1 + t * sn)], axis=1).reshape(-1)
    p = np.maximum(x1 * x2, 1.0)
    r = np.sqrt(1.0 - 1.0 / p)
    leaves = np.stack([x1 * (1 - r), x1 * (1 + r)], axis=1).reshape(-1)
    return DyadicWeight(depth, leaves)
