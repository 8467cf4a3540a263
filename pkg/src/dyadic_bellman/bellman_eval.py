"""Bellman candidates a_f, A_{L,f}, the concave-case bound, and sharp constants.

With f(z) = Phi(z**2), both candidates are built from the two primitives

    F1(s) = int_1^s f(z)/z dz,        F2(s) = int_1^s f(z)/z**2 dz,

as a_f(s) = 16 F1(s) and

    A_{L,f}(s) = 16 [ (f(L)/L + F2(L)) (s - 1) - s F2(s) + F1(s) ].

Every Phi kind has exact primitives (powers integrate in closed form, tables
are piecewise linear in t), and every primitive can also be obtained by
adaptive quadrature; ``method`` selects between the two.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import CaseDispatchError, DomainError, PreconditionError
from .phi_spec import DOMAIN_TOL, PhiSpec, TriState, classify, eval_f, eval_h, eval_phi
from .quadrature import integrate

ALPHA_BRANCH_TOL = 1e-9
METHODS = ("auto", "closed", "quad")


# -- primitives ---------------------------------------------------------------


def _expm1_ratio(beta, log_r):
    """(r**beta - 1)/beta given log r; tends to log r as beta -> 0."""
    log_r = np.asarray(log_r, dtype=float)
    if abs(beta) < ALPHA_BRANCH_TOL:
        return log_r * (1.0 + 0.5 * beta * log_r)
    return np.expm1(beta * log_r) / beta


def _power_primitives(alpha: float, s):
    ls = np.log(s)
    return _expm1_ratio(2 * alpha, ls), _expm1_ratio(2 * alpha - 1, ls)


def _power_increments(alpha: float, s, t):
    """(F1(s) - F1(t), F2(s) - F2(t)) without subtracting large numbers."""
    lr = np.log1p((s - t) / t)
    d1 = t ** (2 * alpha) * _expm1_ratio(2 * alpha, lr)
    d2 = t ** (2 * alpha - 1) * _expm1_ratio(2 * alpha - 1, lr)
    return d1, d2


class _TablePrimitives:
    """Exact primitives for Phi(t) = a + b t on each table segment."""

    def __init__(self, phi: PhiSpec):
        t = np.asarray(phi.t_points)
        p = np.asarray(phi.phi_points)
        self.b = np.diff(p) / np.diff(t)
        self.a = p[:-1] - self.b * t[:-1]
        self.z = np.sqrt(t)
        z0, z1 = self.z[:-1], self.z[1:]
        seg1 = self.a * np.log(z1 / z0) + 0.5 * self.b * (z1**2 - z0**2)
        seg2 = self.a * (1 / z0 - 1 / z1) + self.b * (z1 - z0)
        self.c1 = np.r_[0.0, np.cumsum(seg1)]
        self.c2 = np.r_[0.0, np.cumsum(seg2)]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        i = np.clip(np.searchsorted(self.z, s, side="right") - 1, 0, self.a.size - 1)
        z0, a, b = self.z[i], self.a[i], self.b[i]
        f1 = self.c1[i] + a * np.log(s / z0) + 0.5 * b * (s * s - z0 * z0)
        f2 = self.c2[i] + a * (1 / z0 - 1 / s) + b * (s - z0)
        return f1, f2


_TABLE_CACHE: dict[int, tuple[PhiSpec, _TablePrimitives]] = {}


def _table(phi: PhiSpec) -> _TablePrimitives:
    hit = _TABLE_CACHE.get(id(phi))
    if hit is None or hit[0] is not phi:
        hit = (phi, _TablePrimitives(phi))
        _TABLE_CACHE[id(phi)] = hit
    return hit[1]


def _check_s(phi: PhiSpec, s):
    s = np.asarray(s, dtype=float)
    if np.any(np.isnan(s)) or np.any(s < 1 - DOMAIN_TOL):
        raise DomainError(f"candidate argument must be >= 1, got {np.min(s)!r}")
    if np.any(s * s > phi.domain_hint * (1 + DOMAIN_TOL)):
        raise DomainError(f"s**2 = {np.max(s)**2!r} beyond the range of Phi")
    return np.clip(s, 1.0, math.sqrt(phi.domain_hint))


def _quad_breaks(phi: PhiSpec):
    return np.sqrt(phi.t_points) if phi.kind == "table" else ()


def _quad_primitives(phi: PhiSpec, s: float) -> tuple[float, float, float]:
    brk = _quad_breaks(phi)
    f1, e1 = integrate(lambda z: eval_f(phi, z) / z, 1.0, s, brk)
    f2, e2 = integrate(lambda z: eval_f(phi, z) / (z * z), 1.0, s, brk)
    return f1, f2, e1 + e2


def primitives(phi: PhiSpec, s, method: str = "auto"):
    """(F1(s), F2(s), error estimate); vectorized except for ``quad``."""
    if method not in METHODS:
        raise PreconditionError(f"method must be one of {METHODS}")
    s = _check_s(phi, s)
    if method == "quad":
        if s.ndim:
            out = np.array([_quad_primitives(phi, float(v)) for v in s.ravel()])
            return (out[:, 0].reshape(s.shape), out[:, 1].reshape(s.shape), float(out[:, 2].sum()))
        return _quad_primitives(phi, float(s))
    if phi.kind == "power":
        f1, f2 = _power_primitives(phi.alpha, s)
    elif phi.kind == "sum":
        f1 = f2 = 0.0
        for c, a in phi.terms:
            g1, g2 = _power_primitives(a, s)
            f1, f2 = f1 + c * g1, f2 + c * g2
    else:
        f1, f2 = _table(phi)(s)
    if np.ndim(f1) == 0:
        return float(f1), float(f2), 0.0
    return f1, f2, 0.0


def _increments(phi: PhiSpec, s, t):
    if phi.kind == "power":
        return _power_increments(phi.alpha, s, t)
    if phi.kind == "sum":
        d1 = d2 = 0.0
        for c, a in phi.terms:
            g1, g2 = _power_increments(a, s, t)
            d1, d2 = d1 + c * g1, d2 + c * g2
        return d1, d2
    fs1, fs2, _ = primitives(phi, s)
    ft1, ft2, _ = primitives(phi, t)
    return fs1 - ft1, fs2 - ft2


# -- candidates ---------------------------------------------------------------


def a_f_eval(phi: PhiSpec, s, method: str = "auto"):
    """a_f(s) = 16 int_1^s f(z)/z dz."""
    return 16 * primitives(phi, s, method)[0]


def _check_L(phi: PhiSpec, L: float, s) -> None:
    if not L >= 1:
        raise DomainError(f"L must be >= 1, got {L!r}")
    if np.any(np.asarray(s) > L * (1 + DOMAIN_TOL)):
        raise DomainError(f"s = {np.max(s)!r} exceeds L = {L!r}")


def _slope_const(phi: PhiSpec, L: float, method: str) -> tuple[float, float]:
    _, f2L, err = primitives(phi, L, method)
    return float(eval_f(phi, L)) / L + f2L, err


def A_Lf_eval(phi: PhiSpec, L: float, s, method: str = "auto"):
    """A_{L,f}(s) for 1 <= s <= L."""
    _check_L(phi, L, s)
    s = np.minimum(np.asarray(s, dtype=float), L) if np.ndim(s) else min(float(s), L)
    if L == 1:
        return np.zeros_like(s) if np.ndim(s) else 0.0
    c, _ = _slope_const(phi, L, method)
    f1, f2, _ = primitives(phi, s, method)
    return 16 * (c * (s - 1) - s * f2 + f1)


def A_Lf_derivative(phi: PhiSpec, L: float, s):
    """A'(s) = 16 [f(L)/L + int_s^L h]."""
    _check_L(phi, L, s)
    c, _ = _slope_const(phi, L, "auto")
    _, f2, _ = primitives(phi, s)
    return 16 * (c - f2)


def candidate_values(phi: PhiSpec, candidate: str, s, L: float | None = None):
    """Vectorized evaluation of ``af`` or ``alf`` (the latter needs L)."""
    if candidate == "af":
        return a_f_eval(phi, s)
    if candidate == "alf":
        return A_Lf_eval(phi, L, s)
    raise PreconditionError(f"unknown candidate {candidate!r}")


def candidate_increment(phi: PhiSpec, candidate: str, s, t, L: float | None = None):
    """candidate(s) - candidate(t), computed from increments of the primitives."""
    s = _check_s(phi, s)
    t = _check_s(phi, t)
    d1, d2 = _increments(phi, s, t)
    if candidate == "af":
        return 16 * d1
    if candidate != "alf":
        raise PreconditionError(f"unknown candidate {candidate!r}")
    _check_L(phi, L, s)
    _check_L(phi, L, t)
    if L == 1:
        return np.zeros_like(s)
    c, _ = _slope_const(phi, L, "auto")
    _, f2t, _ = primitives(phi, t)
    return 16 * ((c - f2t) * (s - t) - s * d2 + d1)


# -- concave case -------------------------------------------------------------


def s0_of(L: float, s):
    """Tangency point of the optimal single-tangent majorant."""
    if not L > 1:
        raise DomainError("s0 needs L > 1")
    s = np.asarray(s, dtype=float) if np.ndim(s) else float(s)
    return (9 * L * L - s * s - s - 1) / (3 * (4 * L - s - 1))


def concave_upper_bound(phi: PhiSpec, L: float, s):
    """8 (s - 1)(4L - s - 1) h(s0(s))."""
    _check_L(phi, L, s)
    if L == 1:
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
    s = np.asarray(s, dtype=float) if np.ndim(s) else float(s)
    return 8 * (s - 1) * (4 * L - s - 1) * eval_h(phi, s0_of(L, s))


def h_slope(phi: PhiSpec, z0: float, step: float = 1e-6) -> float:
    """h'(z0): exact for powers, a central difference otherwise."""
    if phi.kind == "power":
        return (2 * phi.alpha - 2) * z0 ** (2 * phi.alpha - 3)
    if phi.kind == "sum":
        return sum(c * (2 * a - 2) * z0 ** (2 * a - 3) for c, a in phi.terms)
    lo = max(1.0, z0 - step)
    hi = min(math.sqrt(phi.domain_hint), z0 + step)
    return float((eval_h(phi, hi) - eval_h(phi, lo)) / (hi - lo))


def tangent_candidate(phi: PhiSpec, L: float, s, z0: float, slope: float | None = None):
    """A_{L,f} for f(z) = z**2 (h(z0) + m (z - z0)), the tangent majorant at z0.

    For concave h every such candidate dominates the Bellman function; the
    minimum over z0 is attained at ``s0_of(L, s)`` and equals
    ``concave_upper_bound``.
    """
    m = h_slope(phi, z0) if slope is None else slope
    s = np.asarray(s, dtype=float) if np.ndim(s) else float(s)
    h0 = float(eval_h(phi, z0))
    return 8 / 3 * (s - 1) * (
        3 * (h0 - z0 * m) * (4 * L - s - 1) + m * (9 * L * L - s * s - s - 1)
    )


# -- sharp constants ----------------------------------------------------------


@dataclass(frozen=True)
class ConstantValue:
    value: float
    case: str
    bound_only: bool = False
    quad_err: float = 0.0


@dataclass(frozen=True)
class BellmanReport:
    q: float
    s: float
    candidate: str
    value: float
    case_used: str
    quadrature_error_estimate: float
    bound_only: bool = False
    warning: str = ""

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "s": self.s,
            "candidate": self.candidate,
            "value": self.value,
            "case": self.case_used,
            "bound_only": self.bound_only,
            "quad_err": self.quadrature_error_estimate,
            "warning": self.warning,
        }


@dataclass(frozen=True)
class ConstantsReport:
    q: float
    upper_K: float
    lower_k: float
    upper_case: str
    lower_case: str
    upper_bound_only: bool
    quad_err: float

    def as_dict(self) -> dict:
        return asdict(self)


K_CASE_1 = "K case 1: Phi increasing, h convex"
K_CASE_2 = "K case 2: Phi increasing, h concave (upper bound only)"
K_CASE_3 = "K case 3: Phi decreasing"
k_CASE_1 = "k case 1: h increasing"
k_CASE_2 = "k case 2: h decreasing"


def _y_integral(phi: PhiSpec, q: float, weight=None) -> tuple[float, float]:
    """int_1^q Phi(y)/y * weight(y) dy by quadrature."""
    brk = phi.t_points if phi.kind == "table" else ()
    if weight is None:
        return integrate(lambda y: eval_phi(phi, y) / y, 1.0, q, brk)
    return integrate(lambda y: eval_phi(phi, y) / y * weight(y), 1.0, q, brk)


def _classification_text(cls) -> str:
    return ", ".join(f"{k}={v}" for k, v in cls.as_dict().items() if k not in ("grid_size", "method"))


def K_of(phi: PhiSpec, q: float, grid_size: int = 256) -> ConstantValue:
    """Upper sharp constant (or bound) selected from the classification of Phi."""
    if q < 1:
        raise DomainError("q must be >= 1")
    cls = classify(phi, q, grid_size)
    L = math.sqrt(q)
    if cls.phi_increasing is TriState.YES and cls.h_convex is TriState.YES:
        if q == 1:
            return ConstantValue(0.0, K_CASE_1)
        val, err = _y_integral(phi, q, lambda y: 1 - 1 / np.sqrt(y))
        return ConstantValue(16 * eval_phi(phi, q) * (1 - 1 / L) + 8 * val, K_CASE_1, False, 8 * err)
    if cls.phi_decreasing is TriState.YES:
        val, err = _y_integral(phi, q)
        return ConstantValue(8 * val, K_CASE_3, False, 8 * err)
    if cls.phi_increasing is TriState.YES and cls.h_concave is TriState.YES:
        if q == 1:
            return ConstantValue(0.0, K_CASE_2, True)
        val = 8 * (L - 1) * (3 * L - 1) * eval_h(phi, s0_of(L, L))
        return ConstantValue(float(val), K_CASE_2, True)
    raise CaseDispatchError(f"no upper-constant case applies ({_classification_text(cls)})")


def k_of(phi: PhiSpec, q: float, grid_size: int = 256) -> ConstantValue:
    """Lower sharp constant selected from the monotonicity of h."""
    if q < 1:
        raise DomainError("q must be >= 1")
    cls = classify(phi, q, grid_size)
    if cls.h_increasing is TriState.YES:
        val, err = _y_integral(phi, q)
        return ConstantValue(8 * val, k_CASE_1, False, 8 * err)
    if cls.h_decreasing is TriState.YES:
        return ConstantValue(b_boundary(phi, q), k_CASE_2)
    raise CaseDispatchError(f"no lower-constant case applies ({_classification_text(cls)})")


def constants_report(phi: PhiSpec, q: float, grid_size: int = 256) -> ConstantsReport:
    up = K_of(phi, q, grid_size)
    lo = k_of(phi, q, grid_size)
    return ConstantsReport(q, up.value, lo.value, up.case, lo.case, up.bound_only, up.quad_err + lo.quad_err)


def b_boundary(phi: PhiSpec, q: float) -> float:
    """Lower Bellman value on the boundary x1 x2 = q."""
    return 8 * eval_phi(phi, q) * (1 - 1 / q)


def K_alpha_info(alpha: float, q: float) -> tuple[float, bool]:
    """(K_alpha(q), bound_only) from the closed-form branches."""
    if q < 1:
        raise DomainError("q must be >= 1")
    a = float(alpha)
    r = math.sqrt(q)
    if q == 1:
        return 0.0, 1 < a < 1.5
    if 1 < a < 1.5:
        val = (
            8 * 3 ** (2 - 2 * a) * (r - 1)
            * (8 * q - r - 1) ** (2 * a - 2) * (3 * r - 1) ** (3 - 2 * a)
        )
        return val, True
    if abs(a) < ALPHA_BRANCH_TOL:
        return 8 * math.log(q), False
    if a < 0:
        return 8 / a * (q**a - 1), False
    if abs(a - 0.5) < ALPHA_BRANCH_TOL:
        return 32 * r - 8 * math.log(q) - 32, False
    val = (
        8 * (2 * a + 1) / a * q**a
        - 32 * a / (2 * a - 1) * q ** (a - 0.5)
        + 8 / (a * (2 * a - 1))
    )
    return val, False


def K_alpha(alpha: float, q: float) -> float:
    return K_alpha_info(alpha, q)[0]


def k_alpha(alpha: float, q: float) -> float:
    if q < 1:
        raise DomainError("q must be >= 1")
    a = float(alpha)
    if a >= 1:
        return 8 / a * (q**a - 1)
    return 8 * (q**a - q ** (a - 1))


# -- characteristic bound from the Carleson norm -----------------------------


def u_function(phi: PhiSpec, q: float) -> float:
    """u(Q) = (8/Q) int_1^Q Phi(t) dt."""
    if q < 1:
        raise DomainError("q must be >= 1")
    if q == 1:
        return 0.0
    if phi.kind == "power":
        return 8 / q * float(_expm1_ratio(phi.alpha + 1, math.log(q)))
    brk = phi.t_points if phi.kind == "table" else ()
    return 8 / q * integrate(lambda t: eval_phi(phi, t), 1.0, q, brk)[0]


def u_inverse(phi: PhiSpec, norm: float, rel_tol: float = 1e-10, q_max: float = 1e12) -> float:
    """The Q >= 1 with u(Q) = norm, by bracketed bisection."""
    if not norm > 0:
        return 1.0
    lo, u_lo = 1.0, 0.0
    hi = 2.0
    while True:
        if hi > min(q_max, phi.domain_hint):
            raise PreconditionError("u does not reach the requested norm on the search bracket")
        u_hi = u_function(phi, hi)
        if u_hi <= u_lo:
            raise PreconditionError("u is not increasing on the search bracket")
        if u_hi >= norm:
            break
        lo, u_lo, hi = hi, u_hi, min(2 * hi, phi.domain_hint) if hi < phi.domain_hint else 2 * hi
    while hi - lo > rel_tol * lo:
        mid = 0.5 * (lo + hi)
        if u_function(phi, mid) < norm:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- reports ------------------------------------------------------------------


def bellman_report(phi: PhiSpec, q: float, s: float, candidate: str = "alf", method: str = "auto") -> BellmanReport:
    """Evaluate a candidate at s and tag the case of the classification it serves."""
    if q < 1:
        raise DomainError("q must be >= 1")
    L = math.sqrt(q)
    if candidate == "af":
        val = a_f_eval(phi, s, method)
        err = primitives(phi, s, method)[2] * 16
        case = k_CASE_1 if classify(phi, q).h_increasing is TriState.YES else K_CASE_3
        return BellmanReport(q, s, "a_f", float(val), case, err)
    if candidate == "alf":
        val = A_Lf_eval(phi, L, s, method)
        err = 16 * (primitives(phi, s, method)[2] + primitives(phi, L, method)[2])
        cls = classify(phi, q)
        warn = "" if (cls.phi_increasing is TriState.YES and cls.h_convex is TriState.YES) else (
            "Phi is not classified as increasing with convex h; A_Lf is not a certified majorant"
        )
        return BellmanReport(q, s, "A_Lf", float(val), K_CASE_1, err, False, warn)
    if candidate == "concave":
        val = concave_upper_bound(phi, L, s)
        cls = classify(phi, q)
        warn = "" if (cls.phi_increasing is TriState.YES and cls.h_concave is TriState.YES) else (
            "Phi is not classified as increasing with concave h"
        )
        return BellmanReport(q, s, "concave_bound", float(val), K_CASE_2, 0.0, True, warn)
    raise PreconditionError(f"unknown candidate {candidate!r}")
