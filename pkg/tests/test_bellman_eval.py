import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from dyadic_bellman.bellman_eval import (
    A_Lf_derivative,
    A_Lf_eval,
    K_alpha,
    K_alpha_info,
    K_of,
    a_f_eval,
    b_boundary,
    bellman_report,
    candidate_increment,
    concave_upper_bound,
    constants_report,
    k_alpha,
    k_of,
    s0_of,
    tangent_candidate,
    u_function,
    u_inverse,
)
from dyadic_bellman.exceptions import CaseDispatchError, DomainError
from dyadic_bellman.phi_spec import PhiSpec, eval_f

ALPHAS = [-1, -0.5, 0, 0.25, 0.5, 0.75, 1, 1.25, 1.5, 2, 3]
TABLE = PhiSpec.table([1, 1.7, 2.5, 4, 9, 16], [1, 1.4, 2.6, 3.0, 7.5, 20.0])


def scipy_af(phi, s):
    return 16 * quad(lambda z: eval_f(phi, z) / z, 1, s, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def scipy_alf(phi, L, s):
    c = eval_f(phi, L) / L + quad(lambda z: eval_f(phi, z) / z**2, 1, L, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    tail = quad(lambda z: eval_f(phi, z) / z**2 * (s - z), 1, s, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return 16 * c * (s - 1) - 16 * tail


def test_spot_values():
    assert a_f_eval(PhiSpec.power(3), 1.0) == 0.0
    assert a_f_eval(PhiSpec.power(1), 2.0) == pytest.approx(24.0, rel=1e-15)
    assert a_f_eval(PhiSpec.power(0), 2.0) == pytest.approx(16 * math.log(2), rel=1e-15)
    assert A_Lf_eval(PhiSpec.power(2), 3.0, 1.0) == 0.0
    assert A_Lf_eval(PhiSpec.power(1), 2.0, 2.0) == pytest.approx(40.0, rel=1e-15)
    assert A_Lf_eval(PhiSpec.power(0.5), 2.0, 2.0) == pytest.approx(32 - 16 * math.log(2), rel=1e-15)
    with pytest.raises(DomainError):
        A_Lf_eval(PhiSpec.power(1), 2.0, 2.1)
    with pytest.raises(DomainError):
        a_f_eval(PhiSpec.power(1), 0.9)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("s", [1.0, 1.3, 2.0, 3.0])
def test_closed_form_vs_quadrature(alpha, s):
    phi = PhiSpec.power(alpha)
    L = 3.0
    closed = a_f_eval(phi, s)
    assert closed == pytest.approx(a_f_eval(phi, s, "quad"), rel=1e-8, abs=1e-12)
    assert closed == pytest.approx(scipy_af(phi, s), rel=1e-8, abs=1e-12)
    closed = A_Lf_eval(phi, L, s)
    assert closed == pytest.approx(A_Lf_eval(phi, L, s, "quad"), rel=1e-8, abs=1e-12)
    assert closed == pytest.approx(scipy_alf(phi, L, s), rel=1e-8, abs=1e-12)


def test_displayed_power_forms():
    for a in (0.25, 0.75, 2.0, 3.0):
        L, s = 2.5, 1.7
        ref = 8 / (a * (2 * a - 1)) * (1 - s ** (2 * a)) + 32 * a / (2 * a - 1) * L ** (2 * a - 1) * (s - 1)
        assert A_Lf_eval(PhiSpec.power(a), L, s) == pytest.approx(ref, rel=1e-12)
    L, s = 2.5, 1.7
    assert A_Lf_eval(PhiSpec.power(0.5), L, s) == pytest.approx(
        32 * (s - 1) - 16 * math.log(L) + 16 * s * math.log(L / s), rel=1e-13)
    assert A_Lf_eval(PhiSpec.power(0), L, s) == pytest.approx(16 * math.log(s), rel=1e-13)


@pytest.mark.parametrize("s", [1.0, 1.2, 1.31, 2.0, 3.5, 4.0])
def test_table_exact_primitives(s):
    assert a_f_eval(TABLE, s) == pytest.approx(scipy_af(TABLE, s), rel=1e-10, abs=1e-12)
    assert A_Lf_eval(TABLE, 4.0, s) == pytest.approx(scipy_alf(TABLE, 4.0, s), rel=1e-10, abs=1e-12)
    assert A_Lf_eval(TABLE, 4.0, s, "quad") == pytest.approx(A_Lf_eval(TABLE, 4.0, s), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("phi", [PhiSpec.power(a) for a in (0, 0.5, 1, 2, 3)] + [TABLE])
def test_A_increasing_concave_for_increasing_f(phi):
    L = 4.0
    s = np.linspace(1, L, 1000)
    A = A_Lf_eval(phi, L, s)
    assert np.all(np.diff(A) > 0)
    assert np.all(np.diff(A, 2) <= 1e-10 * np.max(A))
    assert np.all(np.diff(a_f_eval(phi, s)) > 0)
    # A'(s) >= 16 f(s)/s
    assert np.all(A_Lf_derivative(phi, L, s) >= 16 * eval_f(phi, s) / s * (1 - 1e-12))


def test_derivative_matches_finite_difference():
    phi = PhiSpec.power(1.7)
    L, s, h = 3.0, 1.9, 1e-6
    fd = (A_Lf_eval(phi, L, s + h) - A_Lf_eval(phi, L, s - h)) / (2 * h)
    assert A_Lf_derivative(phi, L, s) == pytest.approx(fd, rel=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(1, 3), st.floats(1, 3), st.sampled_from(ALPHAS + ["table"]))
def test_increments_match_differences(s, t, alpha):
    phi = TABLE if alpha == "table" else PhiSpec.power(alpha)
    L = 3.0
    for cand, fn in (("af", a_f_eval), ("alf", lambda p, x: A_Lf_eval(p, L, x))):
        direct = fn(phi, s) - fn(phi, t)
        assert candidate_increment(phi, cand, s, t, L) == pytest.approx(direct, rel=1e-9, abs=1e-11)


@settings(max_examples=40, deadline=None)
@given(st.floats(1, 2), st.floats(0, 5), st.floats(0, 5), st.sampled_from([0, 0.3, 1, 2.5]), st.sampled_from([-0.5, 0.5, 1.5]))
def test_linearity(s, c1, c2, a1, a2):
    L = 2.0
    phi = PhiSpec.power_sum([(c1, a1), (c2, a2)])
    lhs = A_Lf_eval(phi, L, s)
    rhs = c1 * A_Lf_eval(PhiSpec.power(a1), L, s) + c2 * A_Lf_eval(PhiSpec.power(a2), L, s)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    assert a_f_eval(phi, s) == pytest.approx(
        c1 * a_f_eval(PhiSpec.power(a1), s) + c2 * a_f_eval(PhiSpec.power(a2), s), rel=1e-12, abs=1e-12)


def test_s0_examples():
    assert s0_of(2, 2) == pytest.approx(29 / 15, rel=1e-15)
    assert s0_of(2, 1) == pytest.approx(33 / 18, rel=1e-15)
    for L in (1.5, 2.0, 10.0):
        Q = L * L
        assert s0_of(L, L) == pytest.approx((8 * Q - L - 1) / (3 * (3 * L - 1)), rel=1e-14, abs=0)
        s = np.linspace(1, L, 200)
        v = s0_of(L, s)
        assert np.all(v > 1) and np.all(v <= L * (1 + 1e-15))
    with pytest.raises(DomainError):
        s0_of(1.0, 1.0)


def test_concave_bound_examples():
    phi = PhiSpec.power(1.25)
    assert concave_upper_bound(phi, 2.0, 1.0) == 0.0
    assert concave_upper_bound(phi, 2.0, 2.0) == pytest.approx(40 * math.sqrt(29 / 15), rel=1e-14)
    assert concave_upper_bound(PhiSpec.power(1), 2.0, 2.0) == pytest.approx(40.0)
    assert concave_upper_bound(PhiSpec.power(1), 2.0, 1.6) == pytest.approx(A_Lf_eval(PhiSpec.power(1), 2.0, 1.6))


@pytest.mark.parametrize("alpha", [1.1, 1.25, 1.4])
@pytest.mark.parametrize("s", [1.2, 1.6, 2.0])
def test_concave_bound_is_the_best_tangent(alpha, s):
    phi, L = PhiSpec.power(alpha), 2.0
    best = concave_upper_bound(phi, L, s)
    assert tangent_candidate(phi, L, s, s0_of(L, s)) == pytest.approx(best, rel=1e-13)
    for z0 in np.linspace(1.0001, L, 50):
        assert tangent_candidate(phi, L, s, z0) >= best * (1 - 1e-13)
    # and it dominates the convex-case candidate, which is too small here
    assert best >= A_Lf_eval(phi, L, s) * (1 - 1e-13)


def test_constants_examples():
    assert K_of(PhiSpec.power(1), 1.0).value == 0.0
    assert k_of(PhiSpec.power(1), 1.0).value == 0.0
    assert K_of(PhiSpec.power(1), 4.0).value == pytest.approx(40.0, rel=1e-13)
    assert K_of(PhiSpec.power(-1), 4.0).value == pytest.approx(6.0, rel=1e-13)
    assert k_of(PhiSpec.power(1), 4.0).value == pytest.approx(24.0, rel=1e-13)
    assert k_of(PhiSpec.power(0.5), 4.0).value == pytest.approx(12.0, rel=1e-13)
    assert K_alpha(0, math.e) == pytest.approx(8.0)
    assert K_alpha(0.5, 4) == pytest.approx(64 - 8 * math.log(4) - 32)
    assert K_alpha(1, 4) == pytest.approx(40.0) and k_alpha(1, 4) == pytest.approx(24.0)
    assert K_of(PhiSpec.power(1.25), 4.0).bound_only
    assert K_alpha_info(1.25, 4.0)[1]


def test_case_dispatch_error_names_the_cases():
    wavy = PhiSpec.table([1, 2, 3, 4], [1, 3, 1, 3])
    with pytest.raises(CaseDispatchError, match="phi_increasing"):
        K_of(wavy, 4.0)
    with pytest.raises(CaseDispatchError):
        k_of(wavy, 4.0)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("q", [1.0, 2.0, 4.0, 100.0])
def test_ordering_and_zero(alpha, q):
    K, bound = K_alpha_info(alpha, q)
    assert k_alpha(alpha, q) <= K * (1 + 1e-12)
    if q == 1:
        assert K == pytest.approx(0, abs=1e-12) and k_alpha(alpha, q) == pytest.approx(0, abs=1e-12)


def test_report_and_boundary():
    r = constants_report(PhiSpec.power(2), 4.0)
    assert r.upper_K == pytest.approx(K_alpha(2, 4)) and r.lower_k == pytest.approx(k_alpha(2, 4))
    assert b_boundary(PhiSpec.power(1), 4.0) == pytest.approx(24.0)
    rep = bellman_report(PhiSpec.power(1.25), 4.0, 2.0, "alf")
    assert rep.warning
    rep = bellman_report(PhiSpec.power(1.25), 4.0, 2.0, "concave")
    assert rep.bound_only and not rep.warning


def test_u_inverse_examples():
    assert u_inverse(PhiSpec.power(1), 0.0) == 1.0
    assert u_inverse(PhiSpec.power(0), 4.0) == pytest.approx(2.0, rel=1e-10)
    assert u_inverse(PhiSpec.power(1), 6.0) == pytest.approx(2.0, rel=1e-10)
    phi = PhiSpec.power(0.7)
    q = u_inverse(phi, 10.0)
    assert u_function(phi, q) == pytest.approx(10.0, rel=1e-9)
    assert u_function(TABLE, 9.0) == pytest.approx(8 / 9 * quad(lambda t: float(TABLE(t)), 1, 9, points=[1.7, 2.5, 4])[0])
