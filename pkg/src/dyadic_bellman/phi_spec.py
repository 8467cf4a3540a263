"""The weight functional Phi on [1, inf) and its derived functions.

Three representations are supported:

* ``power``: Phi(t) = t**alpha;
* ``sum``: a non-negative combination of powers, sum_i c_i t**alpha_i;
* ``table``: piecewise-linear interpolation of (t, Phi(t)) samples.

Derived functions are f(s) = Phi(s**2) and h(s) = f(s) / s**2.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DomainError, PreconditionError

# Arguments this close below 1 (or above a table's end) are clamped, not rejected.
DOMAIN_TOL = 1e-9
CLASSIFY_TOL = 1e-12


class TriState(str, enum.Enum):
    YES = "yes"
    NO = "no"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class PhiSpec:
    """Immutable description of Phi.

    Use the constructors :meth:`power`, :meth:`power_sum` and :meth:`table`
    rather than instantiating directly.
    """

    kind: str
    alpha: float | None = None
    terms: tuple[tuple[float, float], ...] = ()
    t_points: tuple[float, ...] = ()
    phi_points: tuple[float, ...] = ()
    domain_hint: float = math.inf

    @classmethod
    def power(cls, alpha: float) -> "PhiSpec":
        return cls(kind="power", alpha=float(alpha))

    @classmethod
    def power_sum(cls, terms: Sequence[tuple[float, float]]) -> "PhiSpec":
        """Phi(t) = sum of ``coef * t**alpha`` over ``(coef, alpha)`` pairs."""
        terms = tuple((float(c), float(a)) for c, a in terms)
        if not terms:
            raise PreconditionError("power_sum needs at least one term")
        if any(c < 0 or not math.isfinite(c) for c, _ in terms):
            raise PreconditionError("power_sum coefficients must be finite and >= 0")
        return cls(kind="sum", terms=terms)

    @classmethod
    def table(cls, t: Sequence[float], phi: Sequence[float]) -> "PhiSpec":
        t_arr = np.asarray(t, dtype=float)
        p_arr = np.asarray(phi, dtype=float)
        if t_arr.ndim != 1 or t_arr.shape != p_arr.shape or len(t_arr) < 2:
            raise PreconditionError("table needs two equal-length columns with >= 2 rows")
        if not np.all(np.isfinite(t_arr)) or not np.all(np.isfinite(p_arr)):
            raise PreconditionError("table entries must be finite")
        if np.any(np.diff(t_arr) <= 0):
            raise PreconditionError("table t values must be strictly increasing")
        if abs(t_arr[0] - 1.0) > DOMAIN_TOL:
            raise PreconditionError("table must start at t = 1")
        if np.any(p_arr < 0):
            raise PreconditionError("Phi must be non-negative")
        return cls(
            kind="table",
            t_points=tuple(t_arr.tolist()),
            phi_points=tuple(p_arr.tolist()),
            domain_hint=float(t_arr[-1]),
        )

    @property
    def label(self) -> str:
        if self.kind == "power":
            return f"power:{self.alpha:g}"
        if self.kind == "sum":
            return "sum:" + ",".join(f"{c:g}@{a:g}" for c, a in self.terms)
        return f"table[{len(self.t_points)} pts, t<={self.domain_hint:g}]"

    def __call__(self, t):
        return eval_phi(self, t)

    def __add__(self, other: "PhiSpec") -> "PhiSpec":
        return PhiSpec.power_sum(_as_terms(self) + _as_terms(other))


def _as_terms(phi: PhiSpec) -> tuple[tuple[float, float], ...]:
    if phi.kind == "power":
        return ((1.0, phi.alpha),)
    if phi.kind == "sum":
        return phi.terms
    raise PreconditionError("only power and sum kinds can be added")


def _check_t(phi: PhiSpec, t: np.ndarray) -> np.ndarray:
    if np.any(np.isnan(t)):
        raise DomainError("Phi evaluated at NaN")
    if np.any(t < 1.0 - DOMAIN_TOL):
        raise DomainError(f"Phi is defined on [1, inf); got t = {t.min()!r}")
    if np.any(t > phi.domain_hint * (1.0 + DOMAIN_TOL)):
        raise DomainError(
            f"t = {t.max()!r} exceeds the table range [1, {phi.domain_hint!r}]"
        )
    return np.clip(t, 1.0, phi.domain_hint)


def _power(t: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 0.0:
        return np.ones_like(t)
    return t**alpha


def eval_phi(phi: PhiSpec, t):
    """Phi(t); accepts scalars or arrays, returns the same shape."""
    scalar = np.ndim(t) == 0
    t = _check_t(phi, np.asarray(t, dtype=float))
    if phi.kind == "power":
        out = _power(t, phi.alpha)
    elif phi.kind == "sum":
        out = sum(c * _power(t, a) for c, a in phi.terms)
    elif phi.kind == "table":
        out = np.interp(t, phi.t_points, phi.phi_points)
    else:
        raise PreconditionError(f"unknown Phi kind {phi.kind!r}")
    return float(out) if scalar else out


def eval_f(phi: PhiSpec, s):
    """f(s) = Phi(s**2)."""
    s = np.asarray(s, dtype=float) if np.ndim(s) else float(s)
    return eval_phi(phi, s * s)


def eval_h(phi: PhiSpec, s):
    """h(s) = Phi(s**2) / s**2."""
    s = np.asarray(s, dtype=float) if np.ndim(s) else float(s)
    return eval_f(phi, s) / (s * s)


@dataclass(frozen=True)
class PhiClassification:
    phi_increasing: TriState
    phi_decreasing: TriState
    h_increasing: TriState
    h_decreasing: TriState
    h_convex: TriState
    h_concave: TriState
    grid_size: int
    method: str = field(default="grid")

    def as_dict(self) -> dict:
        return {
            "phi_increasing": self.phi_increasing.value,
            "phi_decreasing": self.phi_decreasing.value,
            "h_increasing": self.h_increasing.value,
            "h_decreasing": self.h_decreasing.value,
            "h_convex": self.h_convex.value,
            "h_concave": self.h_concave.value,
            "grid_size": self.grid_size,
            "method": self.method,
        }


def _yes(flag: bool) -> TriState:
    return TriState.YES if flag else TriState.NO


def _power_rules(alpha: float) -> dict[str, TriState]:
    return {
        "phi_increasing": _yes(alpha >= 0),
        "phi_decreasing": _yes(alpha <= 0),
        "h_increasing": _yes(alpha >= 1),
        "h_decreasing": _yes(alpha <= 1),
        "h_convex": _yes(alpha >= 1.5 or alpha <= 1),
        "h_concave": _yes(1 <= alpha <= 1.5),
    }


def _sign_pair(d: np.ndarray, scale: float) -> tuple[TriState, TriState]:
    """(non-decreasing, non-increasing) verdicts for a sequence of differences."""
    tol = CLASSIFY_TOL * max(1.0, scale)
    up = bool(np.all(d >= -tol))
    down = bool(np.all(d <= tol))
    if up or down:
        return _yes(up), _yes(down)
    return TriState.INDETERMINATE, TriState.INDETERMINATE


def classify_grid(phi: PhiSpec, q: float, grid_size: int = 256) -> PhiClassification:
    """Classify from finite differences on uniform grids (no analytic shortcut)."""
    if q < 1:
        raise PreconditionError("q must be >= 1")
    if grid_size < 3:
        raise PreconditionError("grid_size must be >= 3")
    t = np.linspace(1.0, q, grid_size)
    s = np.linspace(1.0, math.sqrt(q), grid_size)
    phi_t = eval_phi(phi, t)
    h_s = eval_h(phi, s)
    pi, pd = _sign_pair(np.diff(phi_t), float(np.max(np.abs(phi_t))))
    hscale = float(np.max(np.abs(h_s)))
    hi, hd = _sign_pair(np.diff(h_s), hscale)
    hcv, hcc = _sign_pair(np.diff(h_s, 2), hscale)
    return PhiClassification(pi, pd, hi, hd, hcv, hcc, grid_size, "grid")


def classify(phi: PhiSpec, q: float, grid_size: int = 256) -> PhiClassification:
    """Sort Phi into the monotonicity/convexity cases that select a constant formula.

    Power functions are classified analytically.  For sums, a property that
    holds for every term holds for the sum; anything else falls back to the
    grid.
    """
    if phi.kind == "power":
        if q < 1:
            raise PreconditionError("q must be >= 1")
        return PhiClassification(**_power_rules(phi.alpha), grid_size=grid_size, method="analytic")
    grid = classify_grid(phi, q, grid_size)
    if phi.kind != "sum":
        return grid
    rules = [_power_rules(a) for c, a in phi.terms if c > 0]
    merged = {}
    for key in _power_rules(0.0):
        if rules and all(r[key] is TriState.YES for r in rules):
            merged[key] = TriState.YES
        else:
            merged[key] = getattr(grid, key)
    return PhiClassification(**merged, grid_size=grid_size, method="analytic+grid")


def parse_phi(text: str) -> PhiSpec:
    """Parse the CLI selector ``power:<alpha>``, ``table:<path>`` or ``sum:c@a,...``."""
    kind, _, arg = text.partition(":")
    if not arg:
        raise PreconditionError(f"malformed Phi selector {text!r}")
    if kind == "power":
        return PhiSpec.power(_parse_float(arg))
    if kind == "table":
        return read_phi_table(arg)
    if kind == "sum":
        terms = []
        for item in arg.split(","):
            c, _, a = item.partition("@")
            terms.append((_parse_float(c), _parse_float(a)))
        return PhiSpec.power_sum(terms)
    raise PreconditionError(f"unknown Phi kind {kind!r}")


def _parse_float(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        return float(num) / float(den)
    return float(text)


def read_phi_table(path: str | Path) -> PhiSpec:
    """Read a CSV with header ``t,phi``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["t", "phi"]:
            raise PreconditionError(f"{path}: expected header 't,phi', got {header}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    t, p = zip(*rows) if rows else ((), ())
    return PhiSpec.table(t, p)


def write_phi_table(phi: PhiSpec, path: str | Path) -> None:
    if phi.kind != "table":
        raise PreconditionError("only table kinds can be written")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "phi"])
        for t, p in zip(phi.t_points, phi.phi_points):
            writer.writerow([repr(t), repr(p)])
