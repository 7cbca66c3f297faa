"""Compiled integration kernels (numba) shared by the radial solvers.

Everything here is deliberately low-level: adaptive Dormand-Prince (RK45)
marches for

* the nonlinear profile equation with its variational and
  chemical-potential sensitivity columns (multiple-shooting segments),
* the exterior-square (wedge) 6-vector of the linearized 4x4 system and
  its adjoint, both with logarithmic renormalization so that only the
  scale exponent can grow,
* a two-column 4x4 sweep with per-node orthonormalization used to
  reconstruct individual eigenfunctions.

The vortex amplitude w(r) enters the coefficient matrices through a dense
quintic-Hermite table on a uniform grid (value, first and second
derivative at each node), giving O(1) lookups inside the hot loops.

All kernels release the GIL so that scans can fan out over a thread pool.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# --- Dormand-Prince 5(4) tableau -------------------------------------------

_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_MAX_STEPS = 4_000_000
_RENORM_HI = 1.0e2
_RENORM_LO = 1.0e-2


@njit(cache=True, nogil=True)
def profile_value(r, r_base, inv_dr, w_tab, wp_tab, wpp_tab):
    """Quintic-Hermite lookup of the amplitude w(r) from the dense table."""
    n_cell = w_tab.shape[0] - 1
    s = (r - r_base) * inv_dr
    if s > n_cell:
        # beyond the tabulated range the amplitude tail is below table
        # resolution; treating it as zero avoids polynomial extrapolation
        return 0.0
    i = int(s)
    if i < 0:
        i = 0
    elif i >= n_cell:
        i = n_cell - 1
    t = s - i
    h = 1.0 / inv_dr
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5
    h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5
    h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5
    h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5
    h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5)
    h21 = 0.5 * (t3 - 2.0 * t4 + t5)
    return (
        w_tab[i] * h00
        + w_tab[i + 1] * h01
        + h * (wp_tab[i] * h10 + wp_tab[i + 1] * h11)
        + h * h * (wpp_tab[i] * h20 + wpp_tab[i + 1] * h21)
    )


# --- profile shooting segments ---------------------------------------------


@njit(cache=True, nogil=True)
def _profile_rhs(r, y, m, mu, out):
    """Profile ODE with variational (2x2) and d/dmu sensitivity columns.

    State: (w, w', F11, F12, F21, F22, s1, s2) where F is the derivative
    of (w, w') with respect to the segment's initial data and s the
    derivative with respect to mu.
    """
    w = y[0]
    wp = y[1]
    lin = (m * m) / (r * r) + r * r - 2.0 * mu
    out[0] = wp
    out[1] = -wp / r + lin * w + 2.0 * w * w * w
    dfdw = lin + 6.0 * w * w
    dfdwp = -1.0 / r
    out[2] = y[4]
    out[3] = y[5]
    out[4] = dfdw * y[2] + dfdwp * y[4]
    out[5] = dfdw * y[3] + dfdwp * y[5]
    out[6] = y[7]
    out[7] = dfdw * y[6] + dfdwp * y[7] - 2.0 * w


@njit(cache=True, nogil=True)
def integrate_profile_segment(r0, r1, y0, m, mu, rtol, atol):
    """March the 8-real profile state from r0 to r1 (r1 > r0 assumed).

    Returns (state, status); status 0 on success, 1 if the step count ran
    out, 2 if the amplitude diverged (|w| > 1e6).
    """
    n = 8
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    ynew = np.empty(n)
    r = r0
    span = r1 - r0
    h = span * 1e-3
    if h <= 0.0:
        return y, 0
    for _ in range(_MAX_STEPS):
        if r >= r1:
            return y, 0
        if r + h > r1:
            h = r1 - r
        _profile_rhs(r, y, m, mu, k1)
        for i in range(n):
            ytmp[i] = y[i] + h * _A21 * k1[i]
        _profile_rhs(r + 0.2 * h, ytmp, m, mu, k2)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _profile_rhs(r + 0.3 * h, ytmp, m, mu, k3)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _profile_rhs(r + 0.8 * h, ytmp, m, mu, k4)
        for i in range(n):
            ytmp[i] = y[i] + h * (
                _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
            )
        _profile_rhs(r + (8.0 / 9.0) * h, ytmp, m, mu, k5)
        for i in range(n):
            ytmp[i] = y[i] + h * (
                _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
            )
        _profile_rhs(r + h, ytmp, m, mu, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (
                _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
            )
        _profile_rhs(r + h, ynew, m, mu, k7)
        err = 0.0
        for i in range(n):
            e = h * (
                _E1 * k1[i]
                + _E3 * k3[i]
                + _E4 * k4[i]
                + _E5 * k5[i]
                + _E6 * k6[i]
                + _E7 * k7[i]
            )
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            q = e / sc
            err += q * q
        err = np.sqrt(err / n)
        if err <= 1.0:
            r += h
            for i in range(n):
                y[i] = ynew[i]
            if abs(y[0]) > 1.0e6:
                return y, 2
        fac = 0.9 * err ** (-0.2) if err > 1e-12 else 5.0
        if fac < 0.2:
            fac = 0.2
        elif fac > 5.0:
            fac = 5.0
        h *= fac
        if h < 1e-14 * span:
            return y, 1
    return y, 1


# --- wedge (exterior-square) integrators ------------------------------------


@njit(cache=True, nogil=True)
def _wedge_rhs(r, v, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, out):
    """Exterior-square action on the 6-vector of 2x2 minors.

    Basis ordering (01, 02, 03, 12, 13, 23) of the 4x4 state
    (y+, y+', y-, y-').
    """
    w = profile_value(r, r_base, inv_dr, w_tab, wp_tab, wpp_tab)
    c = 2.0 * w * w
    common = r * r - 2.0 * mu + 2.0 * c
    kp = (jm + m) * (jm + m) / (r * r) + common - 2.0j * lam
    km = (jm - m) * (jm - m) / (r * r) + common + 2.0j * lam
    q = -1.0 / r
    out[0] = q * v[0] + c * v[1]
    out[1] = v[2] + v[3]
    out[2] = km * v[1] + q * v[2] + v[4]
    out[3] = kp * v[1] + q * v[3] + v[4]
    out[4] = -c * v[0] + kp * v[2] + km * v[3] + 2.0 * q * v[4] + c * v[5]
    out[5] = -c * v[1] + q * v[5]


@njit(cache=True, nogil=True)
def _wedge_adjoint_rhs(
    r, u, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, out
):
    """Negative-transpose of the exterior-square action (pairing-preserving)."""
    w = profile_value(r, r_base, inv_dr, w_tab, wp_tab, wpp_tab)
    c = 2.0 * w * w
    common = r * r - 2.0 * mu + 2.0 * c
    kp = (jm + m) * (jm + m) / (r * r) + common - 2.0j * lam
    km = (jm - m) * (jm - m) / (r * r) + common + 2.0j * lam
    q = -1.0 / r
    out[0] = -q * u[0] + c * u[4]
    out[1] = -c * u[0] - km * u[2] - kp * u[3] + c * u[5]
    out[2] = -u[1] - q * u[2] - kp * u[4]
    out[3] = -u[1] - q * u[3] - km * u[4]
    out[4] = -u[2] - u[3] - 2.0 * q * u[4]
    out[5] = -c * u[4] - q * u[5]


@njit(cache=True, nogil=True)
def integrate_wedge(
    r0,
    r1,
    v0,
    log0,
    lam,
    jm,
    m,
    mu,
    r_base,
    inv_dr,
    w_tab,
    wp_tab,
    wpp_tab,
    rtol,
    atol,
    adjoint,
):
    """Adaptive RK45 march of a wedge 6-vector from r0 to r1 (either direction).

    The vector is renormalized to unit max-magnitude whenever it leaves
    [1e-2, 1e2]; the accumulated log-magnitude is carried separately.
    Returns (v, log_scale, status); status 0 on success, 1 on step failure.
    """
    n = 6
    v = v0.copy()
    logs = log0
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    k5 = np.empty(n, np.complex128)
    k6 = np.empty(n, np.complex128)
    k7 = np.empty(n, np.complex128)
    vtmp = np.empty(n, np.complex128)
    vnew = np.empty(n, np.complex128)
    r = r0
    span = abs(r1 - r0)
    if span == 0.0:
        return v, logs, 0
    direction = 1.0 if r1 > r0 else -1.0
    h = direction * span * 1e-3
    for _ in range(_MAX_STEPS):
        if direction * (r1 - r) <= 0.0:
            return v, logs, 0
        if direction * (r + h - r1) > 0.0:
            h = r1 - r
        if adjoint:
            _wedge_adjoint_rhs(
                r, v, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k1
            )
        else:
            _wedge_rhs(
                r, v, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k1
            )
        for i in range(n):
            vtmp[i] = v[i] + h * _A21 * k1[i]
        if adjoint:
            _wedge_adjoint_rhs(
                r + 0.2 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab,
                wpp_tab, k2,
            )
        else:
            _wedge_rhs(
                r + 0.2 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab,
                wpp_tab, k2,
            )
        for i in range(n):
            vtmp[i] = v[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        if adjoint:
            _wedge_adjoint_rhs(
                r + 0.3 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab,
                wpp_tab, k3,
            )
        else:
            _wedge_rhs(
                r + 0.3 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab,
                wpp_tab, k3,
            )
        for i in range(n):
            vtmp[i] = v[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        if adjoint:
            _wedge_adjoint_rhs(
                r + 0.8 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab,
                wpp_tab, k4,
            )
        else:
            _wedge_rhs(
                r + 0.8 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab,
                wpp_tab, k4,
            )
        for i in range(n):
            vtmp[i] = v[i] + h * (
                _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
            )
        if adjoint:
            _wedge_adjoint_rhs(
                r + (8.0 / 9.0) * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab,
                wp_tab, wpp_tab, k5,
            )
        else:
            _wedge_rhs(
                r + (8.0 / 9.0) * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab,
                wp_tab, wpp_tab, k5,
            )
        for i in range(n):
            vtmp[i] = v[i] + h * (
                _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
            )
        if adjoint:
            _wedge_adjoint_rhs(
                r + h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k6
            )
        else:
            _wedge_rhs(
                r + h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k6
            )
        for i in range(n):
            vnew[i] = v[i] + h * (
                _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
            )
        if adjoint:
            _wedge_adjoint_rhs(
                r + h, vnew, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k7
            )
        else:
            _wedge_rhs(
                r + h, vnew, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k7
            )
        err = 0.0
        for i in range(n):
            e = h * (
                _E1 * k1[i]
                + _E3 * k3[i]
                + _E4 * k4[i]
                + _E5 * k5[i]
                + _E6 * k6[i]
                + _E7 * k7[i]
            )
            sc = atol + rtol * max(abs(v[i]), abs(vnew[i]))
            q = abs(e) / sc
            err += q * q
        err = np.sqrt(err / n)
        if err <= 1.0:
            r += h
            vmax = 0.0
            for i in range(n):
                v[i] = vnew[i]
                a = abs(vnew[i])
                if a > vmax:
                    vmax = a
            if vmax > _RENORM_HI or (vmax < _RENORM_LO and vmax > 0.0):
                for i in range(n):
                    v[i] /= vmax
                logs += np.log(vmax)
        fac = 0.9 * err ** (-0.2) if err > 1e-12 else 5.0
        if fac < 0.2:
            fac = 0.2
        elif fac > 5.0:
            fac = 5.0
        h *= fac
        if abs(h) < 1e-14 * span:
            return v, logs, 1
    return v, logs, 1


# --- plain 4x4 system, two-column sweep for eigenfunctions -------------------


@njit(cache=True, nogil=True)
def _system_apply(r, y, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, out):
    """First-order 4x4 system on the state (y+, y+', y-, y-')."""
    w = profile_value(r, r_base, inv_dr, w_tab, wp_tab, wpp_tab)
    c = 2.0 * w * w
    common = r * r - 2.0 * mu + 2.0 * c
    kp = (jm + m) * (jm + m) / (r * r) + common - 2.0j * lam
    km = (jm - m) * (jm - m) / (r * r) + common + 2.0j * lam
    q = -1.0 / r
    out[0] = y[1]
    out[1] = kp * y[0] + q * y[1] + c * y[2]
    out[2] = y[3]
    out[3] = c * y[0] + km * y[2] + q * y[3]


@njit(cache=True, nogil=True)
def sweep_pair_on_mesh(
    mesh,
    y0,
    lam,
    jm,
    m,
    mu,
    r_base,
    inv_dr,
    w_tab,
    wp_tab,
    wpp_tab,
    rtol,
    atol,
):
    """Integrate two 4-vector solutions along `mesh`, orthonormalizing at nodes.

    `mesh` may run in either direction.  Returns (ys, rfs, status) where
    ys[k] is the orthonormalized 4x2 column pair at mesh[k] and rfs[k] the
    upper-triangular 2x2 factor absorbed there (identity at k = 0), so the
    true solutions satisfy Y_true(mesh[k]) = ys[k] @ rfs[k] @ ... @ rfs[1].
    """
    n_nodes = mesh.shape[0]
    ys = np.zeros((n_nodes, 4, 2), np.complex128)
    rfs = np.zeros((n_nodes, 2, 2), np.complex128)
    y = y0.copy().astype(np.complex128)
    k1 = np.empty(8, np.complex128)
    k2 = np.empty(8, np.complex128)
    k3 = np.empty(8, np.complex128)
    k4 = np.empty(8, np.complex128)
    k5 = np.empty(8, np.complex128)
    k6 = np.empty(8, np.complex128)
    k7 = np.empty(8, np.complex128)
    vtmp = np.empty(8, np.complex128)
    vnew = np.empty(8, np.complex128)
    flat = np.empty(8, np.complex128)

    # initial orthonormalization
    r00 = 0.0
    for i in range(4):
        r00 += abs(y[i, 0]) ** 2
    r00 = np.sqrt(r00)
    for i in range(4):
        y[i, 0] /= r00
    r01 = 0.0j
    for i in range(4):
        r01 += np.conj(y[i, 0]) * y[i, 1]
    for i in range(4):
        y[i, 1] -= r01 * y[i, 0]
    r11 = 0.0
    for i in range(4):
        r11 += abs(y[i, 1]) ** 2
    r11 = np.sqrt(r11)
    for i in range(4):
        y[i, 1] /= r11
    ys[0] = y
    rfs[0, 0, 0] = 1.0
    rfs[0, 1, 1] = 1.0

    for seg in range(n_nodes - 1):
        ra = mesh[seg]
        rb = mesh[seg + 1]
        for i in range(4):
            flat[i] = y[i, 0]
            flat[4 + i] = y[i, 1]
        span = abs(rb - ra)
        direction = 1.0 if rb > ra else -1.0
        h = direction * span * 0.1
        r = ra
        ok = True
        guard = 0
        while direction * (rb - r) > 0.0:
            guard += 1
            if guard > 200000:
                ok = False
                break
            if direction * (r + h - rb) > 0.0:
                h = rb - r
            _pair_rhs(r, flat, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k1)
            for i in range(8):
                vtmp[i] = flat[i] + h * _A21 * k1[i]
            _pair_rhs(r + 0.2 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k2)
            for i in range(8):
                vtmp[i] = flat[i] + h * (_A31 * k1[i] + _A32 * k2[i])
            _pair_rhs(r + 0.3 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k3)
            for i in range(8):
                vtmp[i] = flat[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            _pair_rhs(r + 0.8 * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k4)
            for i in range(8):
                vtmp[i] = flat[i] + h * (
                    _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
                )
            _pair_rhs(r + (8.0 / 9.0) * h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k5)
            for i in range(8):
                vtmp[i] = flat[i] + h * (
                    _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i]
                    + _A65 * k5[i]
                )
            _pair_rhs(r + h, vtmp, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k6)
            for i in range(8):
                vnew[i] = flat[i] + h * (
                    _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                )
            _pair_rhs(r + h, vnew, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, k7)
            err = 0.0
            for i in range(8):
                e = h * (
                    _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                    + _E6 * k6[i] + _E7 * k7[i]
                )
                sc = atol + rtol * max(abs(flat[i]), abs(vnew[i]))
                qq = abs(e) / sc
                err += qq * qq
            err = np.sqrt(err / 8.0)
            if err <= 1.0:
                r += h
                for i in range(8):
                    flat[i] = vnew[i]
            fac = 0.9 * err ** (-0.2) if err > 1e-12 else 5.0
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
            h *= fac
            if abs(h) < 1e-14 * span:
                ok = False
                break
        if not ok:
            return ys, rfs, 1
        for i in range(4):
            y[i, 0] = flat[i]
            y[i, 1] = flat[4 + i]
        # modified Gram-Schmidt; record the 2x2 factor
        r00 = 0.0
        for i in range(4):
            r00 += abs(y[i, 0]) ** 2
        r00 = np.sqrt(r00)
        for i in range(4):
            y[i, 0] /= r00
        r01 = 0.0j
        for i in range(4):
            r01 += np.conj(y[i, 0]) * y[i, 1]
        for i in range(4):
            y[i, 1] -= r01 * y[i, 0]
        r11 = 0.0
        for i in range(4):
            r11 += abs(y[i, 1]) ** 2
        r11 = np.sqrt(r11)
        for i in range(4):
            y[i, 1] /= r11
        ys[seg + 1] = y
        rfs[seg + 1, 0, 0] = r00
        rfs[seg + 1, 0, 1] = r01
        rfs[seg + 1, 1, 1] = r11
    return ys, rfs, 0


@njit(cache=True, nogil=True)
def _pair_rhs(r, flat, lam, jm, m, mu, r_base, inv_dr, w_tab, wp_tab, wpp_tab, out):
    """RHS for two stacked 4-vectors sharing the same coefficient matrix."""
    w = profile_value(r, r_base, inv_dr, w_tab, wp_tab, wpp_tab)
    c = 2.0 * w * w
    common = r * r - 2.0 * mu + 2.0 * c
    kp = (jm + m) * (jm + m) / (r * r) + common - 2.0j * lam
    km = (jm - m) * (jm - m) / (r * r) + common + 2.0j * lam
    q = -1.0 / r
    for col in range(2):
        o = 4 * col
        out[o + 0] = flat[o + 1]
        out[o + 1] = kp * flat[o + 0] + q * flat[o + 1] + c * flat[o + 2]
        out[o + 2] = flat[o + 3]
        out[o + 3] = c * flat[o + 0] + km * flat[o + 2] + q * flat[o + 3]


# --- dense-table fill for fast profile evaluation ----------------------------


@njit(cache=True, nogil=True)
def _plain_rhs(r, y, m, mu, out):
    """Bare profile ODE (w, w') without variational columns."""
    w = y[0]
    wp = y[1]
    lin = (m * m) / (r * r) + r * r - 2.0 * mu
    out[0] = wp
    out[1] = -wp / r + lin * w + 2.0 * w * w * w


@njit(cache=True, nogil=True)
def profile_dense_fill(
    r_a, w_a, wp_a, m, mu, inv_dr, i_lo, i_hi, w_tab, wp_tab, wpp_tab, rtol, atol
):
    """Integrate one shooting segment, recording state at uniform grid nodes.

    Grid node i sits at radius i / inv_dr.  Entries i_lo..i_hi (inclusive)
    of the tables receive (w, w', w'') there; w'' comes from the ODE.
    Returns 0 on success, 1 on a step-size collapse.
    """
    n = 2
    y = np.empty(n)
    y[0] = w_a
    y[1] = wp_a
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    ynew = np.empty(n)
    r = r_a
    for idx in range(i_lo, i_hi + 1):
        r_t = idx / inv_dr
        span = r_t - r
        if span <= 0.0:
            w_tab[idx] = y[0]
            wp_tab[idx] = y[1]
            _plain_rhs(max(r, 1e-12), y, m, mu, k1)
            wpp_tab[idx] = k1[1]
            continue
        h = span
        guard = 0
        while r < r_t:
            guard += 1
            if guard > 100000:
                return 1
            if r + h > r_t:
                h = r_t - r
            _plain_rhs(r, y, m, mu, k1)
            for i in range(n):
                ytmp[i] = y[i] + h * _A21 * k1[i]
            _plain_rhs(r + 0.2 * h, ytmp, m, mu, k2)
            for i in range(n):
                ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
            _plain_rhs(r + 0.3 * h, ytmp, m, mu, k3)
            for i in range(n):
                ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            _plain_rhs(r + 0.8 * h, ytmp, m, mu, k4)
            for i in range(n):
                ytmp[i] = y[i] + h * (
                    _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
                )
            _plain_rhs(r + (8.0 / 9.0) * h, ytmp, m, mu, k5)
            for i in range(n):
                ytmp[i] = y[i] + h * (
                    _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i]
                    + _A65 * k5[i]
                )
            _plain_rhs(r + h, ytmp, m, mu, k6)
            for i in range(n):
                ynew[i] = y[i] + h * (
                    _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                )
            _plain_rhs(r + h, ynew, m, mu, k7)
            err = 0.0
            for i in range(n):
                e = h * (
                    _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                    + _E6 * k6[i] + _E7 * k7[i]
                )
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                q = e / sc
                err += q * q
            err = np.sqrt(err / n)
            if err <= 1.0:
                r += h
                for i in range(n):
                    y[i] = ynew[i]
            fac = 0.9 * err ** (-0.2) if err > 1e-12 else 5.0
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
            h *= fac
            if h < 1e-15 * max(r_t, 1.0):
                return 1
        w_tab[idx] = y[0]
        wp_tab[idx] = y[1]
        _plain_rhs(r, y, m, mu, k1)
        wpp_tab[idx] = k1[1]
    return 0
