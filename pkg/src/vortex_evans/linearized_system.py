"""Per-mode linearization of the trapped Gross-Pitaevskii equation about a
vortex profile.

Perturbing psi = e^{-i mu t + i m theta}[w + (u e^{i j theta} + conj(v)
e^{-i j theta}) e^{lambda t}] and passing to y_pm = (u, v) gives, for each
azimuthal index j, a 4x4 first-order system in r for the state
(y+, y+', y-, y-'):

    y+'' = [k+ + 4 w^2] y+ - y+'/r + 2 w^2 y-,
    y-'' = 2 w^2 y+ + [k- + 4 w^2] y- - y-'/r,

    k+ = (j+m)^2/r^2 + r^2 - 2 mu - 2 i lambda,
    k- = (j-m)^2/r^2 + r^2 - 2 mu + 2 i lambda.

Eigenvalues lambda are values where a solution regular at the origin decays
at infinity.  This module supplies the coefficient matrix, its lift to
exterior squares (wedges of solution pairs) and the pairing-preserving
adjoint lift, boundary initializations from two-term asymptotics at both
ends, log-rescaled integration, and direct eigenfunction computation by
two-sided orthonormalized sweeps.

Everything here is immutable after construction; integrations at distinct
spectral parameters share no mutable state and may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import mpmath
import numpy as np

from . import _kernels
from .profile import VortexProfile, eval_profile, peak_radius

__all__ = [
    "ModeSystem",
    "ScaledVector",
    "StiffSegmentError",
    "NotAnEigenvalueError",
    "NonSimpleEigenvalueError",
    "EigenfunctionResult",
    "coeff_matrix",
    "exterior_square",
    "wedge_of",
    "dual_of_wedge",
    "origin_init",
    "infinity_init_adjoint",
    "integrate_scaled",
    "origin_pair",
    "infinity_pair",
    "eigenfunction_solve",
]

WEDGE_RTOL = 1e-10
WEDGE_ATOL = 1e-12

# index pairs of the wedge basis e_a ^ e_b (0-based, a < b) in fixed order
_WEDGE_BASIS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# complementary-dual sign: dual(v)_i = sign_i * v[5 - i]
_DUAL_SIGNS = (1.0, -1.0, 1.0, 1.0, -1.0, 1.0)


class StiffSegmentError(RuntimeError):
    """Adaptive integration of the lifted system stalled inside a segment."""


class NotAnEigenvalueError(RuntimeError):
    """Two-sided sweeps found no matching solution at this spectral point."""


class NonSimpleEigenvalueError(RuntimeError):
    """Matching space is more than one-dimensional at this spectral point."""


@dataclass(frozen=True)
class ModeSystem:
    """One azimuthal perturbation mode j of a fixed vortex profile.

    The spectral parameter is carried along so a ModeSystem fully specifies
    a linear ODE system; use `at_lambda` to rebind it cheaply.
    """

    profile: VortexProfile
    j: int
    lam: complex = 0.0j

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def m(self) -> int:
        return self.profile.m

    @property
    def mu(self) -> float:
        return self.profile.mu

    def at_lambda(self, lam: complex) -> "ModeSystem":
        return replace(self, lam=complex(lam))

    @property
    def nu_plus(self) -> int:
        """Origin exponent of the regular co-rotating channel."""
        return abs(self.j + self.m)

    @property
    def nu_minus(self) -> int:
        """Origin exponent of the regular counter-rotating channel."""
        return abs(self.j - self.m)


@dataclass
class ScaledVector:
    """A wedge 6-vector stored as mantissa * e^{log_scale}.

    The mantissa's sup-norm is kept inside [1e-2, 1e2] by the integrator;
    values spanning thousands of decades stay representable.
    """

    v: np.ndarray
    log_scale: float

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex)
        if self.v.shape != (6,):
            raise ValueError("wedge vector must have 6 components")

    def normalized(self) -> "ScaledVector":
        n = float(np.max(np.abs(self.v)))
        if n == 0.0:
            return ScaledVector(self.v.copy(), self.log_scale)
        return ScaledVector(self.v / n, self.log_scale + np.log(n))


# --- coefficient matrices ---------------------------------------------------


def coeff_matrix(sys: ModeSystem, r: float) -> np.ndarray:
    """The 4x4 first-order coefficient matrix B(r) at radius r."""
    if r <= 0.0:
        raise ValueError("coefficient matrix requires r > 0")
    w, _ = eval_profile(sys.profile, r)
    c = 2.0 * w * w
    common = r * r - 2.0 * sys.mu + 2.0 * c
    kp = (sys.j + sys.m) ** 2 / (r * r) + common - 2.0j * sys.lam
    km = (sys.j - sys.m) ** 2 / (r * r) + common + 2.0j * sys.lam
    q = -1.0 / r
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [kp, q, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [c, 0.0, km, q],
        ],
        dtype=complex,
    )


def wedge_of(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Coordinates of x ^ y in the fixed 6-dimensional wedge basis."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return np.array([x[a] * y[b] - x[b] * y[a] for a, b in _WEDGE_BASIS])


def exterior_square(B: np.ndarray) -> np.ndarray:
    """Lift of a 4x4 matrix to the induced operator on wedge coordinates:
    (B^)(x^y) = Bx^y + x^By, assembled column-by-column from basis wedges."""
    B = np.asarray(B, dtype=complex)
    out = np.zeros((6, 6), dtype=complex)
    eye = np.eye(4, dtype=complex)
    for col, (a, b) in enumerate(_WEDGE_BASIS):
        image = wedge_of(B @ eye[a], eye[b]) + wedge_of(eye[a], B @ eye[b])
        out[:, col] = image
    return out


def dual_of_wedge(v: np.ndarray) -> np.ndarray:
    """Complementary dual: pairing dual_of_wedge(c^d) . (a^b) equals
    det(a, b, c, d)."""
    v = np.asarray(v, dtype=complex)
    return np.array([s * v[5 - i] for i, s in enumerate(_DUAL_SIGNS)])


# --- boundary initializations ----------------------------------------------


def _origin_channel(nu: int, a2: complex, r: float) -> tuple[complex, complex]:
    """Two-term regular Frobenius solution r^nu (1 + a2 r^2) and derivative."""
    f = r**nu * (1.0 + a2 * r * r)
    fp = r ** max(nu - 1, 0) * (nu + a2 * (nu + 2.0) * r * r)
    if nu == 0:
        fp = 2.0 * a2 * r
    return f, fp


def origin_init(sys: ModeSystem, r0: float | None = None) -> ScaledVector:
    """Wedge of the two solutions regular at r = 0, initialized at r0.

    The channels decouple to the order kept: the co-rotating solution
    behaves like r^{|j+m|}(1 + a+ r^2) in (y+, y+') and the counter-rotating
    one like r^{|j-m|}(1 + a- r^2) in (y-, y-'); profile coupling enters
    only at relative order r^{2m+2}.  Power prefactors are absorbed into
    log_scale.
    """
    if r0 is None:
        r0 = sys.profile.r_min
    nu_p, nu_m = sys.nu_plus, sys.nu_minus
    a_p = -(sys.mu + 1j * sys.lam) / (2.0 * (nu_p + 1.0))
    a_m = -(sys.mu - 1j * sys.lam) / (2.0 * (nu_m + 1.0))
    f1, f1p = _origin_channel(nu_p, a_p, r0)
    f2, f2p = _origin_channel(nu_m, a_m, r0)
    y1 = np.array([f1, f1p, 0.0, 0.0], dtype=complex)
    y2 = np.array([0.0, 0.0, f2, f2p], dtype=complex)
    return ScaledVector(wedge_of(y1, y2), 0.0).normalized()


def _decay_series(nu_sq: float, beta: complex, r: float):
    """Inverse-square asymptotic series S(r) (and S') multiplying the
    envelope e^{-r^2/2} r^beta, summed to its smallest term.

    Returns (S, S', converged).  The flag is True only when the series
    reached full floating-point accuracy; a merely-truncated sum must not
    be used for argument-principle work because the truncation point (and
    hence the value) jumps discontinuously as the spectral parameter
    moves."""
    s = 1.0 + 0.0j
    sp = 0.0j
    ck = 1.0 + 0.0j
    rk = 1.0
    prev = 1.0
    converged = False
    for k in range(1, 40):
        ck = -ck * ((beta - 2.0 * k + 2.0) ** 2 - nu_sq) / (4.0 * k)
        rk /= r * r
        term = ck * rk
        if abs(term) > prev:
            break
        prev = abs(term)
        s += term
        sp += term * (-2.0 * k) / r
        if abs(term) < 1e-15 * abs(s):
            converged = True
            break
    return s, sp, converged


def _decay_exact(nu: int, beta: complex, r: float) -> tuple[complex, complex]:
    """Envelope-stripped decaying channel solution via the confluent
    hypergeometric U.

    The channel equation y'' + y'/r - (nu^2/r^2 + r^2 - 2(beta+1)) y = 0
    has the recessive solution y = e^{-r^2/2} r^nu U(a, nu+1, r^2) with
    a = (nu - beta)/2; dividing out e^{-r^2/2} r^beta gives
    S = r^{2a} U(a, b, r^2) whose asymptotic expansion the truncated
    series above reproduces term by term.  mpmath evaluates U accurately
    for parameter sizes where that series never converges."""
    a = 0.5 * (nu - beta)
    b = nu + 1.0
    t = r * r
    with mpmath.workdps(30):
        u0 = mpmath.hyperu(a, b, t)
        u1 = mpmath.hyperu(a + 1.0, b + 1.0, t)
        lead = mpmath.power(t, a)
        s = complex(lead * u0)
        # d/dr [r^{2a} U(a,b,r^2)] = (2a/r) S - 2a r^{2a+1} U(a+1,b+1,r^2)
        sp = complex(2.0 * a / r * lead * u0 - 2.0 * a * r * lead * u1)
    return s, sp


def _decay_channel(nu: int, beta: complex, r: float) -> tuple[complex, complex]:
    """Series part (f, f') of the decaying solution with the envelope
    e^{-r^2/2} r^beta divided out (exact-U fallback when the asymptotic
    series cannot reach full accuracy)."""
    s, sp, ok = _decay_series(float(nu) ** 2, beta, r)
    if not ok:
        s, sp = _decay_exact(nu, beta, r)
    return s, (beta / r - r) * s + sp


def infinity_init_adjoint(sys: ModeSystem, R: float | None = None) -> ScaledVector:
    """Dual of the wedge of the two decaying solutions, initialized at R.

    Decaying channels behave like e^{-r^2/2} r^{beta_pm} with beta_+ =
    mu + i lambda - 1 (co-rotating) and beta_- = mu - i lambda - 1; the
    common envelope e^{-R^2} R^{2 mu - 2} is real, independent of lambda,
    and folded into log_scale, which keeps the evaluated pairing analytic
    in lambda.  Evolving this dual with the adjoint lift keeps its pairing
    with any forward wedge constant in r, so the pairing can be read off at
    any interior radius.
    """
    if R is None:
        R = sys.profile.r_max
    beta_p = sys.mu + 1j * sys.lam - 1.0
    beta_m = sys.mu - 1j * sys.lam - 1.0
    f3, f3p = _decay_channel(sys.nu_plus, beta_p, R)
    f4, f4p = _decay_channel(sys.nu_minus, beta_m, R)
    y3 = np.array([f3, f3p, 0.0, 0.0], dtype=complex)
    y4 = np.array([0.0, 0.0, f4, f4p], dtype=complex)
    dual = dual_of_wedge(wedge_of(y3, y4))
    # The pairing of the adjoint-evolved dual with a forward wedge equals the
    # 4x4 solution determinant evaluated at R, which scales like R^{-2}
    # (exp of the integrated trace -2/r); the extra 2 ln R makes the evaluated
    # pairing independent of the truncation radius.
    log0 = -R * R + 2.0 * sys.mu * np.log(R)
    return ScaledVector(dual, log0).normalized()


# --- integration -------------------------------------------------------------


def integrate_scaled(
    sys: ModeSystem,
    state: ScaledVector,
    r_from: float,
    r_to: float,
    adjoint: bool = False,
    rtol: float = WEDGE_RTOL,
    atol: float = WEDGE_ATOL,
) -> ScaledVector:
    """March a (possibly adjoint) wedge vector from r_from to r_to.

    The mantissa is renormalized into [1e-2, 1e2] as needed, accumulating
    magnitude in log_scale.  Raises StiffSegmentError if the adaptive step
    underflows.
    """
    r_base, inv_dr, W, WP, WPP = sys.profile.dense_tables()
    v, log_scale, status = _kernels.integrate_wedge(
        float(r_from),
        float(r_to),
        np.ascontiguousarray(state.v, dtype=complex),
        float(state.log_scale),
        complex(sys.lam),
        float(sys.j),
        float(sys.m),
        float(sys.mu),
        r_base,
        inv_dr,
        W,
        WP,
        WPP,
        rtol,
        atol,
        adjoint,
    )
    if status != 0:
        raise StiffSegmentError(
            f"stiff segment: wedge integration stalled in [{r_from}, {r_to}] "
            f"(j={sys.j}, lambda={sys.lam})"
        )
    return ScaledVector(v, log_scale)


# --- eigenfunctions ----------------------------------------------------------


def origin_pair(sys: ModeSystem, r0: float) -> np.ndarray:
    """4x2 matrix of the two regular solutions at r0 (columns normalized)."""
    nu_p, nu_m = sys.nu_plus, sys.nu_minus
    a_p = -(sys.mu + 1j * sys.lam) / (2.0 * (nu_p + 1.0))
    a_m = -(sys.mu - 1j * sys.lam) / (2.0 * (nu_m + 1.0))
    f1, f1p = _origin_channel(nu_p, a_p, r0)
    f2, f2p = _origin_channel(nu_m, a_m, r0)
    out = np.zeros((4, 2), dtype=complex)
    out[0, 0], out[1, 0] = f1, f1p
    out[2, 1], out[3, 1] = f2, f2p
    out[:, 0] /= np.max(np.abs(out[:, 0]))
    out[:, 1] /= np.max(np.abs(out[:, 1]))
    return out


def infinity_pair(sys: ModeSystem, R: float) -> np.ndarray:
    """4x2 matrix of the two decaying solutions at R, envelopes stripped
    per column (columns normalized; only directions matter for matching)."""
    beta_p = sys.mu + 1j * sys.lam - 1.0
    beta_m = sys.mu - 1j * sys.lam - 1.0
    f3, f3p = _decay_channel(sys.nu_plus, beta_p, R)
    f4, f4p = _decay_channel(sys.nu_minus, beta_m, R)
    out = np.zeros((4, 2), dtype=complex)
    out[0, 0], out[1, 0] = f3, f3p
    out[2, 1], out[3, 1] = f4, f4p
    out[:, 0] /= np.max(np.abs(out[:, 0]))
    out[:, 1] /= np.max(np.abs(out[:, 1]))
    return out


@dataclass(frozen=True)
class EigenfunctionResult:
    """Eigenfunction samples on a radial mesh with matching diagnostics.

    sigma_gap is the smallest singular value of the 4x4 matching problem
    relative to the largest; sigma_second the next one up (both near zero
    signals a non-simple eigenvalue).
    """

    r: np.ndarray
    y_plus: np.ndarray
    y_plus_prime: np.ndarray
    y_minus: np.ndarray
    y_minus_prime: np.ndarray
    lam: complex
    j: int
    sigma_gap: float
    sigma_second: float


def _eigen_mesh(profile: VortexProfile, n: int) -> np.ndarray:
    """Radial mesh clustered near the origin, linear farther out."""
    r_min, r_max = profile.r_min, profile.r_max
    n_geo = n // 4
    geo = np.geomspace(r_min, 0.5, n_geo, endpoint=False)
    lin = np.linspace(0.5, r_max, n - n_geo)
    return np.concatenate([geo, lin])


def eigenfunction_solve(
    sys: ModeSystem,
    lam: complex | None = None,
    n_mesh: int = 512,
    r_match: float | None = None,
    null_tol: float = 1e-5,
    simple_ratio: float = 1e-3,
) -> EigenfunctionResult:
    """Compute the eigenfunction at a (previously located) eigenvalue.

    Two regular solutions are swept outward from the origin and two
    decaying solutions inward from r_max, both orthonormalized at every
    mesh node; a 4x4 singular-value problem at the matching radius (the
    profile peak by default) extracts the one-dimensional intersection,
    and the eigenfunction is reconstructed on the whole mesh through the
    recorded triangular factors.
    """
    if lam is not None:
        sys = sys.at_lambda(lam)
    p = sys.profile
    if p.degenerate:
        raise ValueError("eigenfunctions require a nontrivial profile")
    if r_match is None:
        r_match = peak_radius(p)
    mesh = _eigen_mesh(p, n_mesh)
    k_match = int(np.searchsorted(mesh, r_match))
    k_match = min(max(k_match, 2), len(mesh) - 3)
    left_mesh = np.ascontiguousarray(mesh[: k_match + 1])
    right_mesh = np.ascontiguousarray(mesh[k_match:][::-1])

    r_base, inv_dr, W, WP, WPP = p.dense_tables()
    args = (
        complex(sys.lam), float(sys.j), float(sys.m), float(sys.mu),
        r_base, inv_dr, W, WP, WPP, WEDGE_RTOL, WEDGE_ATOL,
    )
    ys_l, rf_l, st_l = _kernels.sweep_pair_on_mesh(
        left_mesh, origin_pair(sys, left_mesh[0]), *args
    )
    ys_r, rf_r, st_r = _kernels.sweep_pair_on_mesh(
        right_mesh, infinity_pair(sys, right_mesh[0]), *args
    )
    if st_l != 0 or st_r != 0:
        raise StiffSegmentError(
            f"stiff segment during eigenfunction sweeps (lambda={sys.lam})"
        )

    QL = ys_l[-1]
    QR = ys_r[-1]
    M = np.hstack([QL, -QR])
    _, sing, Vh = np.linalg.svd(M)
    gap = sing[-1] / sing[0]
    second = sing[-2] / sing[0]
    if gap > null_tol:
        raise NotAnEigenvalueError(
            f"no decaying solution matches at lambda={sys.lam} "
            f"(matching gap {gap:.2e})"
        )
    if second < simple_ratio:
        raise NonSimpleEigenvalueError(
            f"matching space not one-dimensional at lambda={sys.lam} "
            f"(gaps {gap:.2e}, {second:.2e})"
        )
    coeff = Vh[-1].conj()
    a_left = coeff[:2]
    a_right = coeff[2:]

    n_tot = len(mesh)
    vals = np.zeros((n_tot, 4), dtype=complex)
    # left reconstruction: b_k is the eigenfunction in the local orthonormal
    # frame; marching away from the match point only needs 2x2 triangular
    # solves and stays bounded because b_k is the actual solution magnitude
    b = a_left.copy()
    vals[k_match] = QL @ b
    for k in range(len(left_mesh) - 1, 0, -1):
        b = np.linalg.solve(rf_l[k], b)
        vals[k - 1] = ys_l[k - 1] @ b
    b = a_right.copy()
    for k in range(len(right_mesh) - 1, 0, -1):
        b = np.linalg.solve(rf_r[k], b)
        vals[n_tot - 1 - (k - 1)] = ys_r[k - 1] @ b

    # normalize: unit sup-norm in the dominant channel, phase fixed there
    sup_p = np.max(np.abs(vals[:, 0]))
    sup_m = np.max(np.abs(vals[:, 2]))
    ch = 0 if sup_p >= sup_m else 2
    k_star = int(np.argmax(np.abs(vals[:, ch])))
    vals /= vals[k_star, ch]

    return EigenfunctionResult(
        r=mesh,
        y_plus=vals[:, 0],
        y_plus_prime=vals[:, 1],
        y_minus=vals[:, 2],
        y_minus_prime=vals[:, 3],
        lam=sys.lam,
        j=sys.j,
        sigma_gap=float(gap),
        sigma_second=float(second),
    )
