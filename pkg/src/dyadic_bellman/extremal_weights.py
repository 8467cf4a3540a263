"""Optimizing weight sequences for the candidates, and related special weights.

``af_optimizer`` builds weights with averages (s, s) by repeated tangential
splits along the hyperbolas x1 x2 = s_k**2.  ``alf_optimizer`` combines
normal splits along the diagonal x1 = x2 with one tangential split at the
top of the ladder; its Carleson sums are governed by a tridiagonal system
that ``alf_sigma_solve`` and ``alf_sigma_closed`` solve independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import polygamma

from .dyadic_core import MAX_DEPTH, DyadicWeight, concat
from .exceptions import DomainError, PreconditionError, ResourceError
from .phi_spec import PhiSpec, eval_h, eval_phi


def two_step(x1: float, q: float) -> DyadicWeight:
    """Depth-1 weight with averages (x1, q/x1) whose halves sit on x1 x2 = 1."""
    if not x1 > 0:
        raise PreconditionError("x1 must be positive")
    if not q >= 1:
        raise PreconditionError("q must be >= 1")
    r = math.sqrt(1 - 1 / q)
    return DyadicWeight(1, [x1 * (1 - r), x1 * (1 + r)])


# -- a_f optimizer ------------------------------------------------------------


@dataclass(frozen=True)
class AfOptimizerParams:
    s: float
    n: int

    def __post_init__(self):
        if not self.s >= 1:
            raise DomainError(f"s must be >= 1, got {self.s!r}")
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError("n must be a positive integer")

    @property
    def delta(self) -> float:
        return math.sqrt((self.s**2 - 1) / self.n)

    @property
    def ladder(self) -> np.ndarray:
        """s_0 = s, ..., s_n = 1."""
        k = np.arange(self.n + 1) / self.n
        out = np.sqrt(self.s**2 * (1 - k) + k)
        out[-1] = 1.0
        return out


def af_optimizer(params: AfOptimizerParams) -> DyadicWeight:
    """Depth-n weight with averages (s, s) and characteristic s**2."""
    if params.n > MAX_DEPTH:
        raise ResourceError(f"n = {params.n} exceeds the depth cap {MAX_DEPTH}")
    sk = params.ladder
    d = params.delta
    vals = np.ones(1)
    for k in range(params.n - 1, -1, -1):
        vals = np.concatenate([sk[k + 1] / (sk[k] + d) * vals, sk[k + 1] / (sk[k] - d) * vals])
    return DyadicWeight(params.n, vals)


def af_sum_analytic(params: AfOptimizerParams, phi: PhiSpec) -> float:
    """8 sum_k Phi(s_k**2) Delta**2 / s_k**2 over the n tangential stages."""
    if params.s == 1:
        return 0.0
    sk2 = params.ladder[:-1] ** 2
    return float(8 * params.delta**2 * np.sum(eval_phi(phi, sk2) / sk2))


# -- A_{L,f} optimizer --------------------------------------------------------


@dataclass(frozen=True)
class AlfOptimizerParams:
    """Normal-split ladder s_k = L - k Delta_n, k = 0..2**(N+n).

    The target is s = L - m 2**-(N+1) (L - 1), reached at k* = m 2**(n-1).
    """

    L: float
    N: int
    m: int
    n: int

    def __post_init__(self):
        if not self.L > 1:
            raise DomainError("L must be > 1")
        for name in ("N", "m", "n"):
            if int(getattr(self, name)) != getattr(self, name):
                raise PreconditionError(f"{name} must be an integer")
        if self.N < 0 or self.n < 1:
            raise PreconditionError("need N >= 0 and n >= 1")
        if not 0 <= self.m <= 2 ** (self.N + 1):
            raise PreconditionError(f"m must lie in [0, 2**(N+1)] = [0, {2 ** (self.N + 1)}]")
        if self.N + self.n > 40:
            raise ResourceError("ladder length 2**(N+n) too large")

    @classmethod
    def from_target(cls, L: float, s: float, n: int, max_N: int = 30) -> "AlfOptimizerParams":
        """Parameters reaching s, which must be L - (dyadic rational)(L - 1)."""
        if not 1 <= s <= L:
            raise DomainError(f"need 1 <= s <= L, got s = {s!r}, L = {L!r}")
        frac = (L - s) / (L - 1)
        for N in range(max_N + 1):
            m = round(frac * 2 ** (N + 1))
            if abs(m / 2 ** (N + 1) - frac) <= 1e-12 * max(1.0, frac):
                return cls(L, N, m, n)
        raise DomainError(f"s = {s!r} is not of the form L - m 2^-(N+1) (L-1) with N <= {max_N}")

    @property
    def M(self) -> int:
        return 2 ** (self.N + self.n)

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.N - self.n) * (self.L - 1)

    @property
    def ladder(self) -> np.ndarray:
        out = self.L - np.arange(self.M + 1) * self.delta
        out[-1] = 1.0
        return out

    @property
    def delta_star(self) -> float:
        d = self.delta
        return math.sqrt(d * (2 * self.L - d))

    @property
    def k_star(self) -> int:
        return self.m * 2 ** (self.n - 1)

    @property
    def target(self) -> float:
        return float(self.L - Fraction(self.m, 2 ** (self.N + 1)) * (self.L - 1))


def alf_optimizer(params: AlfOptimizerParams, depth_cap: int) -> DyadicWeight:
    """The weight at ladder index k*, truncated to ``depth_cap`` generations.

    Below the cap every unresolved node is replaced by the constant equal
    to its w-average, so the root w-average is exact while the w^-1
    averages converge only as the cap grows.
    """
    if int(depth_cap) != depth_cap or depth_cap < 1:
        raise PreconditionError("depth_cap must be a positive integer")
    if depth_cap > MAX_DEPTH:
        raise ResourceError(f"depth_cap {depth_cap} exceeds {MAX_DEPTH}")
    sk = params.ladder
    M = params.M
    L = params.L
    ds = params.delta_star
    memo: dict[tuple[int, int], DyadicWeight] = {}

    def mat(k: int, d: int) -> DyadicWeight:
        key = (k, d)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if k == M:
            out = DyadicWeight.constant(d, 1.0)
        elif d == 0:
            out = DyadicWeight.constant(0, sk[k])
        elif k == 0:
            base = mat(1, d - 1).values
            out = DyadicWeight(d, np.concatenate([sk[1] / (L + ds) * base, sk[1] / (L - ds) * base]))
        else:
            out = concat(mat(k - 1, d - 1), mat(k + 1, d - 1))
        memo[key] = out
        return out

    return mat(params.k_star, int(depth_cap))


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas algorithm; ``lower[0]`` and ``upper[-1]`` are ignored."""
    a = np.asarray(lower, dtype=float)
    b = np.asarray(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.asarray(rhs, dtype=float)
    n = b.size
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = c[0] / b[0] if n > 1 else 0.0
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if piv == 0:
            raise PreconditionError("zero pivot in tridiagonal solve")
        cp[i] = c[i] / piv if i < n - 1 else 0.0
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv
    x = np.empty(n)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def sigma_system(params: AlfOptimizerParams, phi: PhiSpec):
    """(lower, diag, upper, rhs) for the unknowns Sigma_0..Sigma_{M-1}."""
    M = params.M
    sk = params.ladder
    d2 = params.delta**2
    lower = np.full(M, -0.5)
    upper = np.full(M, -0.5)
    diag = np.ones(M)
    rhs = np.empty(M)
    upper[0] = -1.0
    lower[0] = 0.0
    rhs[0] = 8 * (params.L**2 - sk[1] ** 2) * eval_h(phi, params.L)
    if M > 1:
        rhs[1:] = 8 * eval_h(phi, sk[1:M]) * d2
    return lower, diag, upper, rhs


def alf_sigma_solve(params: AlfOptimizerParams, phi: PhiSpec) -> np.ndarray:
    """Sigma_0..Sigma_M from the tridiagonal system (Sigma_M = 0)."""
    x = solve_tridiagonal(*sigma_system(params, phi))
    return np.r_[x, 0.0]


def alf_sigma_closed_all(params: AlfOptimizerParams, phi: PhiSpec) -> np.ndarray:
    """Closed-form Sigma_k for every k, vectorized."""
    M, L, d = params.M, params.L, params.delta
    sk = params.ladder
    hj = np.zeros(M + 1)
    hj[1:M] = eval_h(phi, sk[1:M])
    total = float(np.sum((sk - 1) * hj)) * d
    csh = np.cumsum(sk * hj) * d
    ch = np.cumsum(hj) * d
    inner = csh - sk * ch
    out = 8 * (sk - 1) * (2 * L - d) * eval_h(phi, L) + 16 * (total - inner)
    out[-1] = 0.0
    return out


def alf_sigma_closed(params: AlfOptimizerParams, phi: PhiSpec, k: int) -> float:
    """Closed-form Sigma_k (the inner sum is empty for k = 0)."""
    M = params.M
    if int(k) != k or not 0 <= k <= M:
        raise PreconditionError(f"k must be an integer in [0, {M}]")
    if k == M:
        return 0.0
    L, d = params.L, params.delta
    sk = params.ladder
    j = np.arange(1, M)
    hj = eval_h(phi, sk[j])
    first = float(np.sum((sk[j] - 1) * hj)) * d
    second = float(np.sum((sk[1 : k + 1] - sk[k]) * hj[:k])) * d if k > 0 else 0.0
    return 8 * (sk[k] - 1) * (2 * L - d) * float(eval_h(phi, L)) + 16 * (first - second)


# -- counterexample -----------------------------------------------------------


def counterexample_weight(k_max: int) -> DyadicWeight:
    """2**k / k**2 on (2**-k, 2**-(k-1)) for k <= k_max.

    The tail (0, 2**-k_max) carries the mean of the untruncated weight there,
    2**k_max * sum_{k > k_max} k**-2, so every <w>_{(0, 2**-n)} is exact.
    """
    if int(k_max) != k_max or k_max < 1:
        raise PreconditionError("k_max must be a positive integer")
    if k_max > MAX_DEPTH:
        raise ResourceError(f"k_max {k_max} exceeds the depth cap {MAX_DEPTH}")
    K = int(k_max)
    vals = np.empty(2**K)
    for k in range(1, K + 1):
        vals[2 ** (K - k) : 2 ** (K - k + 1)] = 2.0**k / k**2
    vals[0] = 2.0**K * float(polygamma(1, K + 1))
    return DyadicWeight(K, vals)
