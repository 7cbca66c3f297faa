"""Tests for the gamma / confluent-hypergeometric / Laguerre layer.

Frozen expected values were computed with a 30-digit arbitrary-precision
reference implementation (mpmath) and pasted here as literals so the suite
never depends on that package at run time.
"""

import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortex_evans.special_functions import (
    GammaPoleError,
    LinearMode,
    confluent_m,
    confluent_u,
    gamma_fn,
    laguerre,
    linear_mode_eval,
    linear_radial_solutions,
    linear_spectrum,
    recip_gamma,
)

GAMMA_CASES = [
    (0.5, (1.772453850905516 + 0j)),
    (4.7, (15.431411600047436 + 0j)),
    (12.25, (73711509.04676995 + 0j)),
    ((3.5 - 2j), (-1.2371865633661037 - 1.2899550031953229j)),
    ((-2.5 + 1.5j), (0.003412139564239149 - 0.024053490434664735j)),
    ((0.1 + 6j), (-5.5507026005502746e-05 - 8.173819457297947e-05j)),
]

KUMMER_M_CASES = [
    ((-1.5 + 0.8j), 2.0, 6.25, (1.6054331750566682 - 3.2138714245805775j)),
    ((0.25 - 3j), 3.0, 30.0, (-69837164214.5065 + 41007626210.20048j)),
    ((-4 + 0j), 2.0, 55.0, (51442.041666666664 + 0j)),
    ((2.5 + 1j), 4.0, 80.0, (-3.72845234081287e32 - 2.040789549934771e32j)),
    ((-0.75 + 0j), 1.0, 0.5, (0.6124062762217157 + 0j)),
    ((1 - 6j), 5.0, 44.0, (-3.3245434532905732e16 + 5.7245544871347096e16j)),
]

KUMMER_U_CASES = [
    ((-1.2 + 0.4j), 2.0, 4.0, (2.432766850512398 + 0.308822701460104j)),
    ((0.7 - 0.3j), 3.0, 9.0, (0.19169730192367826 + 0.14361438066331764j)),
    ((-2.25 + 0j), 2.5, 2.0, (0.5919867922680047 + 0j)),
    ((0.5 + 2j), 2.0, 60.0, (-0.045786985599852295 - 0.13068994581303303j)),
    ((-3.5 + 0j), 3.0, 16.0, (2858.975188014917 + 0j)),
]

LAGUERRE_CASES = [
    (0, 1.0, 3.0, 1.0),
    (1, 2.0, 1.5, 1.5),
    (4, 1.0, 2.0, -1.0),
    (7, 3.0, 10.0, 24.761904761904763),
    (12, 2.0, 0.3, 18.782969774263083),
]

RADIAL_CASES = [
    (1, 3.7, 1.3, (0.1370410430183725 + 0j), (0.030840550614129734 + 0j),
     (0.21023069794057095 + 0j)),
    (2, 8.25, 2.6, (0.1334413830585201 + 0j), (-2.7163432932284426 + 0j),
     (1.7302986374254385 + 0j)),
    (1, (4 + 0.5j), 0.9, (0.3551216662533216 - 0.051932940760778167j),
     (-0.8187071942560212 - 0.2521961659129245j),
     (0.06416264210353466 - 0.5988193841363296j)),
    (3, 11.0, 3.2, (-0.06787713534598569 + 0j), (-29.242695237995047 + 0j),
     (-13.884353032620565 + 0j)),
]

MODE_CASES = [
    (0, 1, 1.0, 0.6065306597126334),
    (2, 1, 1.7, -0.598727846820075),
    (1, 2, 2.4, -0.8924080056319242),
    (3, 2, 0.6, 2.019550262531565),
]


def rel_err(got, want):
    return abs(got - want) / max(abs(want), 1e-300)


@pytest.mark.parametrize("z,want", GAMMA_CASES)
def test_gamma_reference_values(z, want):
    assert rel_err(gamma_fn(z), want) < 1e-12


def test_gamma_pole_raises():
    for z in (0.0, -1.0, -7.0):
        with pytest.raises(GammaPoleError):
            gamma_fn(z)


def test_recip_gamma_zero_at_poles():
    for z in (0.0, -3.0, -12.0):
        assert recip_gamma(z) == 0.0
    assert rel_err(recip_gamma(4.0), 1.0 / 6.0) < 1e-12


@given(
    st.floats(min_value=0.6, max_value=15.0),
    st.floats(min_value=-8.0, max_value=8.0),
)
@settings(max_examples=80, deadline=None)
def test_gamma_recurrence(x, y):
    z = complex(x, y)
    assert rel_err(gamma_fn(z + 1.0), z * gamma_fn(z)) < 1e-10


@pytest.mark.parametrize("a,b,x,want", KUMMER_M_CASES)
def test_confluent_m_reference_values(a, b, x, want):
    assert rel_err(confluent_m(a, b, x), want) < 1e-9


@pytest.mark.parametrize("a,b,x,want", KUMMER_U_CASES)
def test_confluent_u_reference_values(a, b, x, want):
    assert rel_err(confluent_u(a, b, x), want) < 1e-8


def test_confluent_u_routes_agree_at_noninteger_b():
    # The Laplace-integral path and the M-based connection formula are
    # independent; away from integer b and large x they must agree.
    from vortex_evans.special_functions import _confluent_u_connection

    for a, b, x in [(-0.8, 2.5, 1.7), (complex(0.3, 0.9), 1.25, 3.0), (-2.1, 3.5, 0.8)]:
        primary = confluent_u(a, b, x)
        check = _confluent_u_connection(complex(a), complex(b), complex(x))
        assert rel_err(primary, check) < 1e-7


def test_confluent_u_integer_b_limit_helper():
    # The finite-difference integer-b limit is a low-precision cross-check;
    # its roundoff floor is a few parts in 1e4.
    from vortex_evans.special_functions import _confluent_u_integer_b_limit

    for a, b, x in [(-1.3, 2.0, 1.1), (0.4, 3.0, 2.2)]:
        primary = confluent_u(a, b, x)
        check = _confluent_u_integer_b_limit(complex(a), complex(b), complex(x))
        assert rel_err(primary, check) < 5e-4


@given(
    st.floats(min_value=-3.0, max_value=3.0),
    st.floats(min_value=-3.0, max_value=3.0),
    st.floats(min_value=1.2, max_value=6.0),
    st.floats(min_value=0.05, max_value=12.0),
)
@settings(max_examples=60, deadline=None)
def test_kummer_transformation(ar, ai, b, x):
    # M(a, b, x) = e^x M(b - a, b, -x) for every a, b, x.
    a = complex(ar, ai)
    lhs = confluent_m(a, b, x)
    rhs = cmath.exp(x) * confluent_m(b - a, b, -x)
    # The alternating series at -x cancels to e^{-x} of its largest term,
    # so the achievable agreement degrades by a factor e^x.
    assert abs(lhs - rhs) < 1e-11 * math.exp(x) * max(abs(lhs), 1.0)


@pytest.mark.parametrize("n,alpha,x,want", LAGUERRE_CASES)
def test_laguerre_reference_values(n, alpha, x, want):
    assert rel_err(laguerre(n, alpha, x), want) < 1e-12


@given(
    st.integers(min_value=2, max_value=15),
    st.floats(min_value=0.0, max_value=4.0),
    st.floats(min_value=0.0, max_value=20.0),
)
@settings(max_examples=60, deadline=None)
def test_laguerre_recurrence_consistency(n, alpha, x):
    # (n+1) L_{n+1} = (2n+1+alpha-x) L_n - (n+alpha) L_{n-1}
    lhs = (n + 1) * laguerre(n + 1, alpha, x)
    rhs = (2 * n + 1 + alpha - x) * laguerre(n, alpha, x) - (n + alpha) * laguerre(
        n - 1, alpha, x
    )
    assert abs(lhs - rhs) < 1e-9 * max(abs(lhs), 1.0)


@pytest.mark.parametrize("m,mu,r,w1,w2,wron", RADIAL_CASES)
def test_linear_radial_reference_values(m, mu, r, w1, w2, wron):
    got1, got2, gotw = linear_radial_solutions(m, mu, r)
    assert rel_err(got1, w1) < 1e-9
    assert rel_err(got2, w2) < 1e-8
    assert rel_err(gotw, wron) < 1e-10


def test_wronskian_vanishes_on_linear_spectrum():
    for m in (1, 2):
        for mu in linear_spectrum(m, 3):
            _, _, wron = linear_radial_solutions(m, mu, 1.5)
            assert wron == 0.0


def test_wronskian_matches_finite_difference():
    # Independent check: W = w1 w2' - w2 w1' via central differences.
    m, mu, r, h = 2, 6.3, 1.9, 1e-5
    w1p, w2p, _ = linear_radial_solutions(m, mu, r + h)
    w1m, w2m, _ = linear_radial_solutions(m, mu, r - h)
    w1, w2, wron = linear_radial_solutions(m, mu, r)
    d1 = (w1p - w1m) / (2 * h)
    d2 = (w2p - w2m) / (2 * h)
    assert rel_err(w1 * d2 - w2 * d1, wron) < 1e-8


@pytest.mark.parametrize("n,m,r,want", MODE_CASES)
def test_linear_mode_reference_values(n, m, r, want):
    got = linear_mode_eval(LinearMode(n=n, m=m), r)
    assert rel_err(got, want) < 1e-12
    assert abs(got.imag) < 1e-15


def test_linear_mode_sits_at_its_chemical_potential():
    # The mode must solve the radial equation at mu = m+1+2n: check the
    # ODE residual -f'' - f'/r + (m^2/r^2 + r^2 - 2 mu) f = 0 numerically.
    mode = LinearMode(n=2, m=2)
    mu = mode.mu
    r, h = 1.37, 1e-4
    f = lambda rr: linear_mode_eval(mode, rr).real
    fpp = (f(r + h) - 2 * f(r) + f(r - h)) / h**2
    fp = (f(r + h) - f(r - h)) / (2 * h)
    resid = -fpp - fp / r + (mode.m**2 / r**2 + r**2 - 2 * mu) * f(r)
    assert abs(resid) < 1e-6


def test_linear_spectrum_values():
    assert linear_spectrum(1, 3) == [2.0, 4.0, 6.0, 8.0]
    assert linear_spectrum(2, 2) == [3.0, 5.0, 7.0]


def test_linear_mode_validation():
    with pytest.raises(ValueError):
        LinearMode(n=-1, m=1)
    with pytest.raises(ValueError):
        LinearMode(n=0, m=0)


def test_mode_normalization_integral():
    # int_0^inf w_n^2 r dr = (n+m)! / (2 n!)  for w_n = r^m e^{-r^2/2} L_n^m(r^2).
    mode = LinearMode(n=1, m=2)
    total = 0.0
    n_pts, rmax = 4000, 12.0
    dr = rmax / n_pts
    for i in range(1, n_pts + 1):
        r = i * dr
        total += abs(linear_mode_eval(mode, r)) ** 2 * r * dr
    want = math.factorial(mode.n + mode.m) / (2.0 * math.factorial(mode.n))
    assert abs(total - want) < 1e-3 * want
