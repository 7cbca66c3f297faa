"""Vortex radial profiles: continuation from the bifurcation point plus
multiple-shooting refinement.

The stationary vortex ansatz psi = e^{-i mu t} e^{i m theta} w(r) reduces
the trapped Gross-Pitaevskii equation to the radial boundary-value problem

    w'' = -w'/r + (m^2/r^2 + r^2 - 2 mu) w + 2 w^3,
    w ~ d0 r^m  (r -> 0),      w ~ A r^{mu-1} e^{-r^2/2}  (r -> infinity).

Nontrivial solutions bifurcate from the zero state at mu_0 = m + 1 along
the lowest linear mode and are followed in mu by pseudo-arclength
predictor-corrector continuation in (mu, d0); each accepted point is a
multiple-shooting solution on a 64-node mesh solved by damped Newton with
an analytic Jacobian from the variational equations.  Converged profiles
carry a dense quintic-Hermite table so that w(r), w'(r) can be read off
in O(1) anywhere, including inside compiled coefficient evaluations.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import _kernels

__all__ = [
    "VortexProfile",
    "BranchPoint",
    "ContinuationSettings",
    "BranchStallError",
    "InvalidProfileError",
    "seed_profile",
    "zero_profile",
    "continue_branch",
    "shoot_refine",
    "eval_profile",
    "particle_number",
    "physical_N",
    "particle_number_from_N",
    "energy",
    "profile_invariant_report",
    "radius_of_mu",
    "peak_radius",
]

R_MIN = 1e-7
N_NODES = 64
DENSE_CELLS = 8192
SEG_RTOL = 1e-10
SEG_ATOL = 1e-12
# Magnitude below which shooting residuals are measured absolutely; the
# profile tail decays through dozens of decades and only its absolute size
# matters downstream (it enters coefficients as 2 w^2).
RESIDUAL_FLOOR = 1e-8

# Default species constants (sodium in a pancake trap): scattering length,
# atomic mass, axial and transverse trap angular frequencies, hbar.
SODIUM_CONSTANTS = {
    "a": 2.75e-9,
    "M": 1.0e-26,
    "omega_z": 2.0 * math.pi * 200.0,
    "omega_tr": 2.0 * math.pi * 10.0,
}
_HBAR = 6.6261e-34 / (2.0 * math.pi)


class BranchStallError(RuntimeError):
    """Continuation corrector kept failing after the allowed step halvings."""

    def __init__(self, message, points):
        super().__init__(message)
        self.points = points


class InvalidProfileError(ValueError):
    """A converged profile violated a structural invariant."""


def radius_of_mu(mu: float) -> float:
    """Outer truncation radius: linear from R(3)=5 to R(35)=25, clamped."""
    return float(np.clip(5.0 + 0.625 * (mu - 3.0), 5.0, 25.0))


def _build_nodes(mu: float, n_nodes: int = N_NODES) -> np.ndarray:
    """Shooting mesh: geometric clustering near the origin, then spacing
    capped by min(1.2, 12/r) so outer-segment transfer growth stays
    representable at the largest mu."""
    r_max = radius_of_mu(mu)
    pts = [R_MIN]
    r = R_MIN
    while r < r_max:
        dr = min(r, min(1.2, 12.0 / max(r, 1.0)))
        r = min(r + dr, r_max)
        pts.append(r)
    raw = np.asarray(pts)
    idx = np.linspace(0.0, len(raw) - 1.0, n_nodes)
    nodes = np.interp(idx, np.arange(len(raw)), raw)
    nodes[0] = R_MIN
    nodes[-1] = r_max
    return nodes


def _origin_series_coeffs(m: int, mu: float, d0: float) -> tuple[float, float]:
    """Frobenius corrections: w = d0 r^m (1 + c1 r^2 + c2 r^4 + ...)."""
    c1 = -mu / (2.0 * (m + 1.0))
    cubic = 2.0 * d0 * d0 if m == 1 else 0.0
    c2 = (1.0 + cubic - 2.0 * mu * c1) / (8.0 * (m + 2.0))
    return c1, c2


def _origin_state(m: int, mu: float, d0: float, r: float) -> np.ndarray:
    c1, c2 = _origin_series_coeffs(m, mu, d0)
    w = d0 * r**m * (1.0 + c1 * r * r + c2 * r**4)
    wp = d0 * (
        m * r ** (m - 1)
        + c1 * (m + 2.0) * r ** (m + 1)
        + c2 * (m + 4.0) * r ** (m + 3)
    )
    return np.array([w, wp])


def _origin_state_d0_deriv(m: int, mu: float, d0: float, r: float) -> np.ndarray:
    c1, c2 = _origin_series_coeffs(m, mu, d0)
    dc2 = (4.0 * d0 / (8.0 * (m + 2.0))) if m == 1 else 0.0
    w = r**m * (1.0 + c1 * r * r + (c2 + d0 * dc2) * r**4)
    wp = (
        m * r ** (m - 1)
        + c1 * (m + 2.0) * r ** (m + 1)
        + (c2 + d0 * dc2) * (m + 4.0) * r ** (m + 3)
    )
    return np.array([w, wp])


def _origin_state_mu_deriv(m: int, mu: float, d0: float, r: float) -> np.ndarray:
    dc1 = -1.0 / (2.0 * (m + 1.0))
    c1, _ = _origin_series_coeffs(m, mu, d0)
    dc2 = (-2.0 * c1 - 2.0 * mu * dc1) / (8.0 * (m + 2.0))
    w = d0 * (dc1 * r ** (m + 2) + dc2 * r ** (m + 4))
    wp = d0 * (dc1 * (m + 2.0) * r ** (m + 1) + dc2 * (m + 4.0) * r ** (m + 3))
    return np.array([w, wp])


def _tail_state(A: float, m: int, mu: float, r: float) -> np.ndarray:
    """Far-field model w = A e^{-r^2/2} r^{beta} sum_k c_k r^{-2k}, beta = mu-1.

    The inverse-square series is asymptotic; it is summed to its smallest
    term, which at the truncation radii used here reaches machine level.
    """
    beta = mu - 1.0
    s = 1.0
    sp = 0.0  # sum of c_k * (-2k) r^{-2k-1}
    ck = 1.0
    rk = 1.0
    prev = abs(ck)
    for k in range(1, 40):
        ck = -ck * ((beta - 2.0 * k + 2.0) ** 2 - m * m) / (4.0 * k)
        rk /= r * r
        term = ck * rk
        if abs(term) > prev:
            break
        prev = abs(term)
        s += term
        sp += term * (-2.0 * k) / r
        if abs(term) < 1e-17 * abs(s):
            break
    env = A * math.exp(-0.5 * r * r + beta * math.log(r))
    w = env * s
    wp = env * ((beta / r - r) * s + sp)
    return np.array([w, wp])


# --- multiple shooting -------------------------------------------------------


def _segment_sweep(nodes, m, mu, d0, interior, A):
    """Integrate every segment once; return per-segment end states and
    derivative blocks.

    interior: array (n_seg - 1, 2) of node states at nodes[1:-1].
    Returns (ends, phis, smus) where ends[i] is the integrated state at
    nodes[i+1], phis[i] the 2x2 derivative with respect to the segment's
    starting state (for segment 0: with respect to d0 in column 0), and
    smus[i] the derivative with respect to mu.
    """
    n_seg = len(nodes) - 1
    ends = np.empty((n_seg, 2))
    phis = np.empty((n_seg, 2, 2))
    smus = np.empty((n_seg, 2))
    state = np.empty(8)
    for i in range(n_seg):
        r0, r1 = nodes[i], nodes[i + 1]
        if i == 0:
            y0 = _origin_state(m, mu, d0, r0)
            dy_dd0 = _origin_state_d0_deriv(m, mu, d0, r0)
            dy_dmu = _origin_state_mu_deriv(m, mu, d0, r0)
            state[:2] = y0
            state[2:6] = (dy_dd0[0], 0.0, dy_dd0[1], 0.0)
            state[6:] = dy_dmu
        else:
            state[:2] = interior[i - 1]
            state[2:6] = (1.0, 0.0, 0.0, 1.0)
            state[6:] = (0.0, 0.0)
        out, status = _kernels.integrate_profile_segment(
            r0, r1, state, m, mu, SEG_RTOL, SEG_ATOL
        )
        if status != 0:
            raise FloatingPointError(f"segment integration failed on [{r0}, {r1}]")
        ends[i] = out[:2]
        phis[i] = out[2:6].reshape(2, 2)
        smus[i] = out[6:]
    return ends, phis, smus


def _tail_mu_deriv(A, m, mu, r):
    h = 1e-6
    return (_tail_state(A, m, mu + h, r) - _tail_state(A, m, mu - h, r)) / (2.0 * h)


def _residual_and_jacobian(nodes, m, mu, d0, interior, A, free_mu):
    """Assemble the shooting residual F and Jacobian J.

    Unknown ordering: [d0, (w_i, w'_i) for interior nodes, A] and, when
    free_mu, a trailing mu column.  Rows are the 2 matching conditions per
    segment, scaled by the local solution magnitude (floored).
    """
    n_seg = len(nodes) - 1
    n_unk = 2 * n_seg + (1 if free_mu else 0)
    ends, phis, smus = _segment_sweep(nodes, m, mu, d0, interior, A)
    tail = _tail_state(A, m, mu, nodes[-1])
    tail_basis = _tail_state(1.0, m, mu, nodes[-1])

    F = np.zeros(2 * n_seg)
    J = np.zeros((2 * n_seg, n_unk))
    scales = np.zeros(2 * n_seg)
    for i in range(n_seg):
        target = interior[i] if i < n_seg - 1 else tail
        F[2 * i : 2 * i + 2] = ends[i] - target
        scale = 1.0 / max(np.max(np.abs(target)), np.max(np.abs(ends[i])), RESIDUAL_FLOOR)
        scales[2 * i : 2 * i + 2] = scale
        # left dependency
        if i == 0:
            J[0:2, 0] = phis[0][:, 0]  # column built against d/d d0
        else:
            J[2 * i : 2 * i + 2, 2 * i - 1 : 2 * i + 1] = phis[i]
        # right dependency
        if i < n_seg - 1:
            J[2 * i, 2 * i + 1] = -1.0
            J[2 * i + 1, 2 * i + 2] = -1.0
        else:
            J[2 * i : 2 * i + 2, 2 * n_seg - 1] = -tail_basis
        if free_mu:
            col = smus[i].copy()
            if i == n_seg - 1:
                col -= _tail_mu_deriv(A, m, mu, nodes[-1])
            J[2 * i : 2 * i + 2, -1] = col
    return F, J, scales


def _newton_shoot(nodes, m, mu, d0, interior, A, *, free_mu, fixed_d0,
                  arc_row=None, tol=1e-10, max_iter=14):
    """Damped Newton on the multiple-shooting system.

    arc_row: optional (t_mu, t_d0, rhs) pseudo-arclength constraint
    t_mu*(mu - mu_p)/S_MU + t_d0*(d0 - d0_p)/S_D0 = 0 appended when both mu
    and d0 are free.  Returns (mu, d0, interior, A, converged flag).
    """
    mu = float(mu)
    d0 = float(d0)
    interior = interior.copy()
    A = float(A)
    for _ in range(max_iter):
        try:
            F, J, scales = _residual_and_jacobian(
                nodes, m, mu, d0, interior, A, free_mu
            )
        except FloatingPointError:
            return mu, d0, interior, A, False
        Fs = F * scales
        res = np.max(np.abs(Fs))
        rows = J * scales[:, None]
        if arc_row is not None:
            t_mu, t_d0, mu_p, d0_p, s_mu, s_d0 = arc_row
            g = t_mu * (mu - mu_p) / s_mu + t_d0 * (d0 - d0_p) / s_d0
            extra = np.zeros(rows.shape[1])
            extra[0] = t_d0 / s_d0
            extra[-1] = t_mu / s_mu
            rows = np.vstack([rows, extra])
            Fs = np.append(Fs, g)
            res = max(res, abs(g))
        if res < tol:
            return mu, d0, interior, A, True
        if fixed_d0:
            rows = np.delete(rows, 0, axis=1)
        # column equilibration: tail rows are measured absolutely, which
        # spreads raw column norms over ~14 decades and defeats a naive solve
        col_norm = np.maximum(np.linalg.norm(rows, axis=0), 1e-30)
        try:
            delta = np.linalg.lstsq(rows / col_norm, -Fs, rcond=None)[0] / col_norm
        except np.linalg.LinAlgError:
            return mu, d0, interior, A, False
        if not np.all(np.isfinite(delta)):
            return mu, d0, interior, A, False
        if fixed_d0:
            delta = np.insert(delta, 0, 0.0)

        def apply(step):
            d0_n = d0 + step * delta[0]
            int_n = interior + step * delta[1 : 1 + interior.size].reshape(
                interior.shape
            )
            A_n = A + step * delta[1 + interior.size]
            mu_n = mu + step * delta[-1] if free_mu else mu
            return mu_n, d0_n, int_n, A_n

        alpha = 1.0
        accepted = False
        for _ in range(8):
            mu_n, d0_n, int_n, A_n = apply(alpha)
            try:
                F_n, _, sc_n = _residual_and_jacobian(
                    nodes, m, mu_n, d0_n, int_n, A_n, free_mu
                )
            except FloatingPointError:
                alpha *= 0.5
                continue
            r_n = np.max(np.abs(F_n * sc_n))
            if arc_row is not None:
                t_mu, t_d0, mu_p, d0_p, s_mu, s_d0 = arc_row
                r_n = max(
                    r_n,
                    abs(t_mu * (mu_n - mu_p) / s_mu + t_d0 * (d0_n - d0_p) / s_d0),
                )
            if r_n < res * (1.0 - 0.25 * alpha) or r_n < tol:
                mu, d0, interior, A = mu_n, d0_n, int_n, A_n
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return mu, d0, interior, A, False
    F, _, scales = _residual_and_jacobian(nodes, m, mu, d0, interior, A, free_mu)
    ok = np.max(np.abs(F * scales)) < tol
    return mu, d0, interior, A, ok


# --- the profile object ------------------------------------------------------


@dataclass(frozen=True)
class VortexProfile:
    """Converged radial profile with dense evaluation tables.

    Immutable after construction; evaluation is read-only and safe to call
    concurrently.  `nodes`, `w`, `w_prime` hold the multiple-shooting data;
    the dense quintic-Hermite table is rebuilt deterministically from them.
    """

    m: int
    mu: float
    nodes: np.ndarray
    w: np.ndarray
    w_prime: np.ndarray
    d0: float
    tail_amplitude: float
    degenerate: bool = False
    # Gaussian bifurcation seeds are defined by their closed form, not as an
    # ODE solution, so their dense table is filled analytically.
    seed_form: bool = field(default=False, compare=False)
    K: float = field(default=0.0)
    _dense: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("vortex degree m must be >= 1")
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        w = np.ascontiguousarray(np.asarray(self.w, dtype=float))
        wp = np.ascontiguousarray(np.asarray(self.w_prime, dtype=float))
        if not (len(nodes) == len(w) == len(wp)):
            raise ValueError("nodes/w/w_prime length mismatch")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w_prime", wp)
        object.__setattr__(self, "_dense", self._build_dense())
        object.__setattr__(self, "K", self._particle_number_quad())

    # dense table ------------------------------------------------------------
    def _build_dense(self):
        r_max = float(self.nodes[-1])
        inv_dr = DENSE_CELLS / r_max
        W = np.zeros(DENSE_CELLS + 1)
        WP = np.zeros(DENSE_CELLS + 1)
        WPP = np.zeros(DENSE_CELLS + 1)
        if self.seed_form and not self.degenerate:
            m, d0 = self.m, self.d0
            rg = np.arange(DENSE_CELLS + 1) / inv_dr
            env = d0 * np.exp(-0.5 * rg * rg)
            W[:] = env * rg**m
            WP[:] = env * (m * rg ** (m - 1) - rg ** (m + 1))
            WPP[:] = env * (
                m * (m - 1) * rg ** max(m - 2, 0)
                - (2 * m + 1) * rg**m
                + rg ** (m + 2)
            )
        elif not self.degenerate:
            # grid index 0 (r = 0): analytic limits of the r^m leading order.
            WP[0] = self.d0 if self.m == 1 else 0.0
            WPP[0] = 2.0 * self.d0 if self.m == 2 else 0.0
            for i in range(len(self.nodes) - 1):
                r_a, r_b = self.nodes[i], self.nodes[i + 1]
                i_lo = int(math.floor(r_a * inv_dr)) + 1
                i_hi = int(math.floor(r_b * inv_dr + 1e-9))
                if i_hi > DENSE_CELLS:
                    i_hi = DENSE_CELLS
                if i_lo > i_hi:
                    continue
                status = _kernels.profile_dense_fill(
                    r_a, self.w[i], self.w_prime[i], self.m, self.mu, inv_dr,
                    i_lo, i_hi, W, WP, WPP, SEG_RTOL, SEG_ATOL,
                )
                if status != 0:
                    raise FloatingPointError("dense table fill failed")
        return (0.0, inv_dr, W, WP, WPP)

    def dense_tables(self):
        """(r_base, inv_dr, w, w', w'') arrays for compiled coefficient loops."""
        return self._dense

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def tail_model(self) -> tuple[float, float]:
        """(amplitude, exponent) of the far-field model A r^{mu-1} e^{-r^2/2}."""
        return (self.tail_amplitude, self.mu - 1.0)

    # evaluation -------------------------------------------------------------
    def __call__(self, r):
        return eval_profile(self, r)

    def _particle_number_quad(self) -> float:
        if self.degenerate:
            return 0.0

        def integrand(rr):
            return eval_profile(self, rr)[0] ** 2 * rr

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(
                integrand, 0.0, self.r_max, epsabs=1e-12, epsrel=1e-11, limit=300
            )
        return 2.0 * math.pi * val


@dataclass(frozen=True)
class BranchPoint:
    """One accepted continuation point: profile plus arclength bookkeeping."""

    mu: float
    profile: VortexProfile
    s: float
    tangent: tuple


@dataclass
class ContinuationSettings:
    step0: float = 0.1
    step_max: float = 0.6
    step_min: float = 1e-6
    max_halvings: int = 10
    grow_after: int = 3
    grow_factor: float = 1.3
    newton_tol: float = 1e-10
    newton_max_iter: int = 14
    n_nodes: int = N_NODES
    # arclength metric scales: mu in units of S_MU, d0 relative to itself
    s_mu: float = 1.0


def _hermite_eval(dense, r):
    """Vectorized quintic-Hermite read of (w, w') from the dense table."""
    r_base, inv_dr, W, WP, WPP = dense
    s = (np.asarray(r, dtype=float) - r_base) * inv_dr
    i = np.clip(s.astype(int), 0, len(W) - 2)
    t = s - i
    h = 1.0 / inv_dr
    t2, t3 = t * t, t * t * t
    t4, t5 = t3 * t, t3 * t * t
    h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5
    h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5
    h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5
    h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5
    h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5)
    h21 = 0.5 * (t3 - 2.0 * t4 + t5)
    w = (
        W[i] * h00 + W[i + 1] * h01
        + h * (WP[i] * h10 + WP[i + 1] * h11)
        + h * h * (WPP[i] * h20 + WPP[i + 1] * h21)
    )
    d00 = (-30.0 * t2 + 60.0 * t3 - 30.0 * t4) * inv_dr
    d10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4
    d11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4
    d20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4) * h
    d21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4) * h
    wp = (
        W[i] * d00 - W[i + 1] * d00
        + WP[i] * d10 + WP[i + 1] * d11
        + WPP[i] * d20 + WPP[i + 1] * d21
    )
    return w, wp


def eval_profile(p: VortexProfile, r):
    """(w, w') at radius r (scalar or array).

    Inside [r_min, r_max] values come from the dense table; below r_min the
    origin power series d0 r^m (1 + ...) is used, beyond r_max the
    far-field model.  The representations agree across the seams to well
    below 1e-9.
    """
    scalar = np.isscalar(r)
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    w = np.zeros_like(rr)
    wp = np.zeros_like(rr)
    if p.degenerate:
        return (0.0, 0.0) if scalar else (w, wp)
    inner = rr < p.r_min
    outer = rr > p.r_max
    mid = ~(inner | outer)
    if np.any(mid):
        w[mid], wp[mid] = _hermite_eval(p._dense, rr[mid])
    for idx in np.nonzero(inner)[0]:
        w[idx], wp[idx] = _origin_state(p.m, p.mu, p.d0, rr[idx])
    for idx in np.nonzero(outer)[0]:
        w[idx], wp[idx] = _tail_state(p.tail_amplitude, p.m, p.mu, rr[idx])
    if scalar:
        return float(w[0]), float(wp[0])
    return w, wp


def peak_radius(p: VortexProfile) -> float:
    """Radius of the single interior maximum of w (the dense-grid argmax,
    polished by bisection on w')."""
    _, inv_dr, W, _, _ = p._dense
    i_pk = int(np.argmax(W))
    lo = max(i_pk - 1, 0) / inv_dr
    hi = min(i_pk + 1, len(W) - 1) / inv_dr
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        _, d = eval_profile(p, mid)
        if d > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- constructors ------------------------------------------------------------


def _profile_from_solution(m, mu, nodes, d0, interior, A, degenerate=False):
    w_nodes = np.empty(len(nodes))
    wp_nodes = np.empty(len(nodes))
    origin = _origin_state(m, mu, d0, nodes[0])
    w_nodes[0], wp_nodes[0] = origin
    if len(nodes) > 2:
        w_nodes[1:-1] = interior[:, 0]
        wp_nodes[1:-1] = interior[:, 1]
    tail = _tail_state(A, m, mu, nodes[-1])
    w_nodes[-1], wp_nodes[-1] = tail
    return VortexProfile(
        m=m, mu=mu, nodes=nodes, w=w_nodes, w_prime=wp_nodes,
        d0=d0, tail_amplitude=A, degenerate=degenerate,
    )


def zero_profile(m: int, mu: float) -> VortexProfile:
    """The trivial w = 0 solution at arbitrary mu (degenerate, for the
    zero-amplitude limits of the linearized problem)."""
    nodes = _build_nodes(mu)
    z = np.zeros(len(nodes))
    return VortexProfile(
        m=m, mu=mu, nodes=nodes, w=z, w_prime=z.copy(),
        d0=0.0, tail_amplitude=0.0, degenerate=True,
    )


def seed_profile(m: int, eps: float = 0.1) -> VortexProfile:
    """Bifurcation-point seed at mu_0 = m+1: w = eps r^m e^{-r^2/2}.

    An O(eps^2)-accurate starting point for continuation; eps = 0 returns
    the flagged degenerate zero profile.
    """
    if m < 1:
        raise ValueError("vortex degree m must be >= 1")
    mu0 = m + 1.0
    if eps == 0.0:
        return zero_profile(m, mu0)
    nodes = _build_nodes(mu0)
    w = eps * nodes**m * np.exp(-0.5 * nodes**2)
    wp = eps * np.exp(-0.5 * nodes**2) * (
        m * nodes ** (m - 1) - nodes ** (m + 1)
    )
    return VortexProfile(
        m=m, mu=mu0, nodes=nodes, w=w, w_prime=wp, d0=eps, tail_amplitude=eps,
        seed_form=True,
    )


def _interior_from_profile(p: VortexProfile, nodes) -> np.ndarray:
    w, wp = eval_profile(p, nodes[1:-1])
    return np.column_stack([w, wp])


def shoot_refine(p: VortexProfile, tol: float = 1e-10) -> VortexProfile:
    """Re-solve the multiple-shooting system at fixed mu.

    Idempotent once converged.  On Newton failure a warning is issued and
    the original profile is returned unchanged.
    """
    if p.degenerate:
        return p
    interior = np.column_stack([p.w[1:-1], p.w_prime[1:-1]])
    mu, d0, interior, A, ok = _newton_shoot(
        p.nodes, p.m, p.mu, p.d0, interior, p.tail_amplitude,
        free_mu=False, fixed_d0=False, tol=tol,
    )
    if not ok:
        warnings.warn("refine failed: multiple-shooting Newton did not converge",
                      RuntimeWarning, stacklevel=2)
        return p
    return _profile_from_solution(p.m, mu, p.nodes, d0, interior, A)


def profile_invariant_report(p: VortexProfile) -> dict:
    """Check the structural bounds of a nontrivial profile.

    Returns {"violations": [...], "r_peak": float, "max_w_sq": float,
    "midpoint_residual": float}.  An empty violation list certifies:
    mu > m+1; w > 0 on (0, r_max); a single interior maximum whose radius
    lies in (m/sqrt(2 mu), sqrt(2 mu)); max w^2 < mu - m; and two-sided
    segment-midpoint matching below 1e-8 of mu times the peak amplitude.
    """
    out = {"violations": [], "r_peak": None, "max_w_sq": None,
           "midpoint_residual": None}
    if p.degenerate:
        out["violations"].append("degenerate zero profile")
        return out
    if not p.mu > p.m + 1.0:
        out["violations"].append(f"mu = {p.mu} not above m+1 = {p.m + 1}")
    _, inv_dr, W, _, _ = p._dense
    w_max = float(np.max(W))
    # the integrated tail sits at the absolute-tolerance noise floor once w
    # has decayed below it, so apply a matching floor to the sign checks
    if np.any(W[1:] < -1e-9 * w_max):
        out["violations"].append("w changes sign on (0, r_max)")
    # single interior maximum: derivative sign pattern +...+ -...-
    grid = np.arange(1, len(W)) / inv_dr
    _, wp_grid = eval_profile(p, grid)
    signs = np.sign(wp_grid[np.abs(wp_grid) > 1e-8 * w_max])
    flips = np.count_nonzero(np.diff(signs) != 0.0)
    if flips != 1:
        out["violations"].append(f"{flips} derivative sign changes (want 1)")
    r_pk = peak_radius(p)
    out["r_peak"] = r_pk
    lo, hi = p.m / math.sqrt(2.0 * p.mu), math.sqrt(2.0 * p.mu)
    if not (lo < r_pk < hi):
        out["violations"].append(
            f"peak radius {r_pk:.6g} outside ({lo:.6g}, {hi:.6g})"
        )
    max_w_sq = float(np.max(W) ** 2)
    out["max_w_sq"] = max_w_sq
    if not max_w_sq < p.mu - p.m:
        out["violations"].append(f"max w^2 = {max_w_sq:.6g} not below mu - m")
    # two-sided midpoint matching
    worst = 0.0
    scale = p.mu * math.sqrt(max_w_sq)
    state = np.empty(8)
    for i in range(len(p.nodes) - 1):
        r_a, r_b = p.nodes[i], p.nodes[i + 1]
        r_mid = 0.5 * (r_a + r_b)
        state[:2] = (p.w[i], p.w_prime[i])
        state[2:] = 0.0
        fwd, st1 = _kernels.integrate_profile_segment(
            r_a, r_mid, state, p.m, p.mu, SEG_RTOL, SEG_ATOL
        )
        # backward integration via reversed radius variable is not needed:
        # integrate the right node forward from r_mid is impossible, so
        # march the right state backward by negating the direction.
        state[:2] = (p.w[i + 1], p.w_prime[i + 1])
        state[2:] = 0.0
        bwd, st2 = _kernels.integrate_profile_segment(
            -r_b, -r_mid, _flip_state(state), p.m, p.mu, SEG_RTOL, SEG_ATOL
        )
        if st1 != 0 or st2 != 0:
            out["violations"].append(f"midpoint residual integration failed at {r_mid}")
            continue
        bwd2 = _flip_state(bwd)
        worst = max(worst, float(np.max(np.abs(fwd[:2] - bwd2[:2]))) / scale)
    out["midpoint_residual"] = worst
    if worst > 1e-8:
        out["violations"].append(f"midpoint residual {worst:.3g} above 1e-8")
    return out


def _flip_state(y):
    """Map (w, w')(r) to the state of the reversed-radius ODE and back."""
    out = y.copy()
    out[1] = -out[1]
    return out


# --- continuation ------------------------------------------------------------


def continue_branch(seed: VortexProfile, mu_target: float,
                    settings: ContinuationSettings | None = None) -> list[BranchPoint]:
    """Follow the ground vortex branch from `seed` up to mu_target.

    Pseudo-arclength continuation in (mu, d0) with a secant predictor;
    the corrector is the damped-Newton multiple-shooting solve.  The step
    halves on corrector failure, grows by 1.3x after three consecutive
    successes, and the final point lands exactly at mu_target via a
    fixed-mu solve.  Raises BranchStallError (carrying the points so far)
    if the corrector keeps failing at the minimum step.
    """
    cfg = settings or ContinuationSettings()
    if mu_target < seed.mu - 1e-12:
        raise ValueError("mu_target must not be below the seed's mu")
    if abs(mu_target - seed.mu) <= 1e-12:
        return [BranchPoint(mu=seed.mu, profile=seed, s=0.0, tangent=(0.0, 1.0))]
    if seed.degenerate:
        raise ValueError("cannot continue from the degenerate zero profile")

    points: list[BranchPoint] = []
    # correct the seed onto the branch at fixed d0 (mu free)
    nodes = _build_nodes(seed.mu, cfg.n_nodes)
    interior = _interior_from_profile(seed, nodes)
    mu, d0, interior, A, ok = _newton_shoot(
        nodes, seed.m, seed.mu, seed.d0, interior, seed.tail_amplitude,
        free_mu=True, fixed_d0=True, tol=cfg.newton_tol,
        max_iter=cfg.newton_max_iter,
    )
    if not ok:
        raise BranchStallError("seed correction failed", [])
    prof = _profile_from_solution(seed.m, mu, nodes, d0, interior, A)
    _accept_or_raise(prof)
    points.append(BranchPoint(mu=mu, profile=prof, s=0.0, tangent=(0.0, 1.0)))

    ds = cfg.step0
    successes = 0
    halvings = 0
    while points[-1].mu < mu_target - 1e-9:
        last = points[-1]
        s_d0 = max(0.05, 0.5 * abs(last.profile.d0))
        if len(points) >= 2:
            prev = points[-2]
            t = np.array([
                (last.mu - prev.mu) / cfg.s_mu,
                (last.profile.d0 - prev.profile.d0) / s_d0,
            ])
            norm = np.linalg.norm(t)
            t = t / norm if norm > 0 else np.array([0.0, 1.0])
        else:
            t = np.array([0.0, 1.0])
        mu_p = last.mu + ds * t[0] * cfg.s_mu
        d0_p = last.profile.d0 + ds * t[1] * s_d0

        if mu_p >= mu_target:
            prof, ok = _land_at_mu(points, mu_target, cfg)
            if ok:
                try:
                    _accept_or_raise(prof)
                except InvalidProfileError:
                    ok = False
            if ok:
                s_new = last.s + ds
                points.append(BranchPoint(mu=mu_target, profile=prof, s=s_new,
                                          tangent=tuple(t)))
                return points
            # landing failed: fall through to a normal (shorter) step
            mu_p = last.mu + 0.5 * ds * t[0] * cfg.s_mu
            d0_p = last.profile.d0 + 0.5 * ds * t[1] * s_d0

        nodes = _build_nodes(mu_p, cfg.n_nodes)
        interior = _predict_interior(points, nodes, d0_p)
        arc = (t[0], t[1], mu_p, d0_p, cfg.s_mu, s_d0)
        mu_n, d0_n, int_n, A_n, ok = _newton_shoot(
            nodes, last.profile.m, mu_p, d0_p, interior,
            last.profile.tail_amplitude,
            free_mu=True, fixed_d0=False, arc_row=arc,
            tol=cfg.newton_tol, max_iter=cfg.newton_max_iter,
        )
        prof = None
        if ok and mu_n > last.mu - 1e-10:
            try:
                prof = _profile_from_solution(last.profile.m, mu_n, nodes,
                                              d0_n, int_n, A_n)
                _accept_or_raise(prof)
            except (InvalidProfileError, FloatingPointError):
                prof = None
        if prof is not None:
            points.append(BranchPoint(mu=mu_n, profile=prof, s=last.s + ds,
                                      tangent=tuple(t)))
            if points[-1].mu >= mu_target - 1e-9:
                # the free-mu corrector reached or overshot the target even
                # though the predictor did not: land exactly at mu_target
                if points[-1].mu <= mu_target + 1e-9:
                    return points
                prof_land, ok_land = _land_at_mu(points, mu_target, cfg)
                if ok_land:
                    try:
                        _accept_or_raise(prof_land)
                    except InvalidProfileError:
                        ok_land = False
                over = points.pop()
                if ok_land:
                    points.append(BranchPoint(mu=mu_target, profile=prof_land,
                                              s=over.s, tangent=over.tangent))
                    return points
                # landing failed: treat the overshoot as a corrector failure
                successes = 0
                halvings += 1
                ds *= 0.5
                if halvings > cfg.max_halvings or ds < cfg.step_min:
                    raise BranchStallError(
                        f"branch stall near mu = {points[-1].mu:.6g}", points
                    )
                continue
            successes += 1
            halvings = 0
            if successes >= cfg.grow_after:
                ds = min(ds * cfg.grow_factor, cfg.step_max)
                successes = 0
        else:
            successes = 0
            halvings += 1
            ds *= 0.5
            if halvings > cfg.max_halvings or ds < cfg.step_min:
                raise BranchStallError(
                    f"branch stall near mu = {last.mu:.6g}", points
                )
    return points


def _accept_or_raise(prof: VortexProfile) -> None:
    report = profile_invariant_report(prof)
    if report["violations"]:
        raise InvalidProfileError("invalid profile: " + "; ".join(report["violations"]))


def _predict_interior(points, nodes, d0_p):
    last = points[-1].profile
    w_l, wp_l = eval_profile(last, nodes[1:-1])
    if len(points) >= 2:
        prev = points[-2].profile
        w_p, wp_p = eval_profile(prev, nodes[1:-1])
        denom = last.d0 - prev.d0
        if abs(denom) > 1e-12:
            frac = (d0_p - last.d0) / denom
            w_l = w_l + frac * (w_l - w_p)
            wp_l = wp_l + frac * (wp_l - wp_p)
    else:
        scale = d0_p / last.d0 if last.d0 != 0.0 else 1.0
        w_l = w_l * scale
        wp_l = wp_l * scale
    return np.column_stack([w_l, wp_l])


def _land_at_mu(points, mu_target, cfg):
    """Fixed-mu solve exactly at mu_target, predicted from the last points."""
    last = points[-1].profile
    nodes = _build_nodes(mu_target, cfg.n_nodes)
    if len(points) >= 2:
        prev = points[-2]
        dmu = points[-1].mu - prev.mu
        frac = (mu_target - points[-1].mu) / dmu if abs(dmu) > 1e-12 else 0.0
        d0_p = last.d0 + frac * (last.d0 - prev.profile.d0)
    else:
        d0_p = last.d0
    interior = _predict_interior(points, nodes, d0_p)
    mu, d0, interior, A, ok = _newton_shoot(
        nodes, last.m, mu_target, d0_p, interior, last.tail_amplitude,
        free_mu=False, fixed_d0=False, tol=cfg.newton_tol,
        max_iter=cfg.newton_max_iter,
    )
    if not ok:
        return None, False
    return _profile_from_solution(last.m, mu_target, nodes, d0, interior, A), True


# --- diagnostics -------------------------------------------------------------


def particle_number(p: VortexProfile) -> float:
    """K = 2 pi int w^2 r dr (adaptive quadrature, cached at construction)."""
    return p.K


def physical_N(K: float, constants: dict | None = None) -> float:
    """Atom number from the norm K by inverting the quasi-2D reduction.

    K = 2 sqrt(2 pi M omega_z / hbar) |a| N, so N = K / (2 |a| sqrt(...)).
    `constants` needs keys a, M, omega_z (omega_tr fixes the in-plane
    units and drops out of the K <-> N relation).
    """
    c = dict(SODIUM_CONSTANTS)
    if constants:
        c.update(constants)
    factor = 2.0 * abs(c["a"]) * math.sqrt(2.0 * math.pi * c["M"] * c["omega_z"] / _HBAR)
    return K / factor


def particle_number_from_N(N: float, constants: dict | None = None) -> float:
    """Inverse of physical_N (exact algebraic round-trip)."""
    c = dict(SODIUM_CONSTANTS)
    if constants:
        c.update(constants)
    factor = 2.0 * abs(c["a"]) * math.sqrt(2.0 * math.pi * c["M"] * c["omega_z"] / _HBAR)
    return N * factor


def energy(p: VortexProfile) -> float:
    """Energy of the vortex ansatz:
    2 pi int [ (w'^2 + m^2 w^2 / r^2)/2 + r^2 w^2 / 2 + w^4 / 2 ] r dr."""
    if p.degenerate:
        return 0.0

    def integrand(rr):
        w, wp = eval_profile(p, rr)
        return (
            0.5 * (wp * wp + (p.m * w / rr) ** 2)
            + 0.5 * rr * rr * w * w
            + 0.5 * w**4
        ) * rr

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(integrand, 0.0, p.r_max, epsabs=1e-12, epsrel=1e-10,
                      limit=300)
    return 2.0 * math.pi * val


# --- serialization -----------------------------------------------------------


def profile_to_json(p: VortexProfile) -> str:
    doc = {
        "m": p.m,
        "mu": p.mu,
        "nodes": [float(x) for x in p.nodes],
        "w": [float(x) for x in p.w],
        "w_prime": [float(x) for x in p.w_prime],
        "d0": p.d0,
        "tail": {"A": p.tail_amplitude},
        "K": p.K,
    }
    return json.dumps(doc, indent=1)


def profile_from_json(text: str) -> VortexProfile:
    doc = json.loads(text)
    degenerate = all(abs(x) == 0.0 for x in doc["w"])
    return VortexProfile(
        m=int(doc["m"]),
        mu=float(doc["mu"]),
        nodes=np.asarray(doc["nodes"], dtype=float),
        w=np.asarray(doc["w"], dtype=float),
        w_prime=np.asarray(doc["w_prime"], dtype=float),
        d0=float(doc["d0"]),
        tail_amplitude=float(doc["tail"]["A"]),
        degenerate=degenerate,
    )


def save_profile(p: VortexProfile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(profile_to_json(p))
        fh.write("\n")


def load_profile(path) -> VortexProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return profile_from_json(fh.read())
