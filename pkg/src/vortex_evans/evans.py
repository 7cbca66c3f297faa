"""Analytic Evans-function evaluation and zero location for the per-mode
linearized operator.

The Evans function of mode j pairs the wedge of the two origin-regular
solutions (integrated rightward) with the complementary dual of the wedge
of the two decaying solutions (integrated leftward in adjoint form).  Its
zeros are exactly the eigenvalues of the mode-j linearization, so the
module provides, on top of point evaluation:

  * scans of the imaginary axis, where the function is real, with sign
    changes polished to simple zeros and near-tangencies resolved to
    double zeros on a locally refined mesh;
  * winding counts over closed contours by the argument principle with
    adaptive sample refinement;
  * moment integrals (1/2*pi*i) oint lambda^k E'/E dlambda used to locate
    enclosed zeros;
  * iterative contour shrinking that pins off-axis zeros to 1e-3.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .linearized_system import (
    WEDGE_ATOL,
    WEDGE_RTOL,
    ModeSystem,
    infinity_init_adjoint,
    integrate_scaled,
    origin_init,
)
from .profile import VortexProfile, peak_radius

THREADS_ENV = "VORTEX_EVANS_THREADS"

# relative zero tolerance: |mantissa| below this fraction of the median
# sampled magnitude counts as "on a zero"
ZERO_REL_TOL = 1e-6
# consecutive contour samples must differ in argument by less than this
ARG_STEP_MAX = np.pi / 2
# tighter threshold used when the samples feed a quadrature
ARG_STEP_MOMENT = np.pi / 4
# relative step of the central difference inside moment integrals
FD_REL_STEP = 1e-5
CORNER_RADIUS = 0.05
CONTOUR_NUDGE = 1e-3
DEFAULT_Y_BOUND = 6.0
DEFAULT_AXIS_SAMPLES = 241


class WindingUnresolvedError(RuntimeError):
    """Contour refinement exhausted its budget before the argument steps
    became unambiguous."""


class InconsistentCountError(RuntimeError):
    """Winding minus axis multiplicities came out negative or odd."""


class RefinementFailedError(RuntimeError):
    """An off-axis zero was lost while shrinking contours around it."""


class DerivativeNoiseWarning(UserWarning):
    """The moment quadrature disagrees with the winding count."""


class _MultipleZerosInCircle(Exception):
    """Internal: a polishing circle unexpectedly contains several zeros."""


def _n_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def _eval_many(evaluator, lams):
    n = _n_threads()
    lams = list(lams)
    if n <= 1 or len(lams) < 4:
        return [evaluator(lam) for lam in lams]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(evaluator, lams))


# --- point evaluation ---------------------------------------------------------


@dataclass(frozen=True)
class EvansValue:
    """Evans-function value stored as mantissa * e^{log_scale}.

    Zero detection uses the mantissa only.  log_scale is real by
    construction (it accumulates positive rescaling factors), so it can
    never introduce branch jumps along a contour, and rescaling events
    never rotate the mantissa's argument.
    """

    value: complex
    log_scale: float
    lam: complex
    j: int
    mu: float


def _default_r_mid(profile: VortexProfile) -> float:
    if profile.degenerate:
        # middle of the classically allowed region of the trap
        return 0.5 * np.sqrt(2.0 * profile.mu)
    return peak_radius(profile)


def evans_eval(
    profile: VortexProfile,
    j: int,
    lam: complex,
    r_mid: float | None = None,
    rtol: float = WEDGE_RTOL,
    atol: float = WEDGE_ATOL,
) -> EvansValue:
    """Pair the origin wedge with the adjoint infinity dual at r_mid.

    The product value * e^{log_scale} is independent of r_mid; the default
    matching radius is the profile maximizer (mid-trap for a zero
    profile).
    """
    sys = ModeSystem(profile, j=j, lam=complex(lam))
    if r_mid is None:
        r_mid = _default_r_mid(profile)
    fwd = integrate_scaled(
        sys, origin_init(sys), profile.r_min, r_mid, rtol=rtol, atol=atol
    )
    # start far enough out that the two-term-per-power decay asymptotics
    # are fully convergent for this lambda (the amplitude is below table
    # resolution beyond r_max, so the extra stretch costs only integration
    # steps, never accuracy)
    b_big = max(abs(sys.mu - 1.0 + 1j * lam), abs(sys.mu - 1.0 - 1j * lam))
    r_start = max(profile.r_max, 1.35 * b_big)
    adj = integrate_scaled(
        sys,
        infinity_init_adjoint(sys, r_start),
        r_start,
        r_mid,
        adjoint=True,
        rtol=rtol,
        atol=atol,
    )
    value = complex(np.dot(adj.v, fwd.v))
    return EvansValue(
        value=value,
        log_scale=fwd.log_scale + adj.log_scale,
        lam=complex(lam),
        j=int(j),
        mu=profile.mu,
    )


def make_evaluator(profile: VortexProfile, j: int, r_mid: float | None = None):
    """Callable lam -> (mantissa, log_scale) for contour machinery."""
    if r_mid is None:
        r_mid = _default_r_mid(profile)

    def ev(lam: complex):
        out = evans_eval(profile, j, lam, r_mid=r_mid)
        return out.value, out.log_scale

    return ev


def _wrap_evaluator(evaluator):
    """Normalize injected evaluators to lam -> (mantissa, log_scale)."""

    def ev(lam: complex):
        out = evaluator(lam)
        if isinstance(out, EvansValue):
            return out.value, out.log_scale
        if isinstance(out, tuple):
            return complex(out[0]), float(out[1])
        return complex(out), 0.0

    return ev


def _resolve_evaluator(profile, j, evaluator):
    if evaluator is not None:
        return _wrap_evaluator(evaluator)
    return make_evaluator(profile, j)


# --- contours -----------------------------------------------------------------


@dataclass(frozen=True)
class ContourPath:
    """Closed sampled contour, counterclockwise; points[0] follows
    points[-1].  After refinement, values/logs/args hold the Evans data at
    the samples with consecutive unwrapped arguments differing by < pi/2.
    """

    points: np.ndarray
    values: np.ndarray | None = field(default=None, compare=False)
    logs: np.ndarray | None = field(default=None, compare=False)
    args: np.ndarray | None = field(default=None, compare=False)

    @staticmethod
    def rounded_rectangle(
        re_lo: float,
        re_hi: float,
        im_lo: float,
        im_hi: float,
        corner: float = CORNER_RADIUS,
        n_total: int = 96,
        max_step: float | None = None,
    ) -> "ContourPath":
        """Counterclockwise rectangle with quarter-circle corners.

        max_step caps the initial sample spacing.  The adaptive argument
        refinement cannot recover a phase step whose true size already
        exceeds pi (it wraps), so the initial spacing must be below the
        contour's fastest phase rotation; see _initial_step."""
        w, h = re_hi - re_lo, im_hi - im_lo
        c = min(corner, 0.45 * min(w, h))
        edges = []
        # straight edges, counterclockwise starting on the right edge
        edges.append(((re_hi, im_lo + c), (re_hi, im_hi - c)))
        edges.append(((re_hi - c, im_hi), (re_lo + c, im_hi)))
        edges.append(((re_lo, im_hi - c), (re_lo, im_lo + c)))
        edges.append(((re_lo + c, im_lo), (re_hi - c, im_lo)))
        arcs = [
            ((re_hi - c, im_hi - c), 0.0),
            ((re_lo + c, im_hi - c), 0.5 * np.pi),
            ((re_lo + c, im_lo + c), np.pi),
            ((re_hi - c, im_lo + c), 1.5 * np.pi),
        ]
        lengths = [2 * (h - 2 * c), 2 * (w - 2 * c), 4 * (0.5 * np.pi * c)]
        per = sum(lengths)
        pts: list[complex] = []
        for k, ((xa, ya), (xb, yb)) in enumerate(edges):
            length = h - 2 * c if k % 2 == 0 else w - 2 * c
            n_e = max(4, int(round(n_total * length / per)))
            if max_step is not None:
                n_e = max(n_e, int(np.ceil(length / max_step)))
            ts = np.linspace(0.0, 1.0, n_e, endpoint=False)
            for t in ts:
                pts.append(complex(xa + t * (xb - xa), ya + t * (yb - ya)))
            (cx, cy), a0 = arcs[k]
            for t in np.linspace(0.0, 0.5 * np.pi, 5, endpoint=False):
                pts.append(
                    complex(cx + c * np.cos(a0 + t), cy + c * np.sin(a0 + t))
                )
        return ContourPath(points=np.array(pts, dtype=complex))

    @staticmethod
    def circle(
        center: complex,
        radius: float,
        n: int = 24,
        max_step: float | None = None,
    ) -> "ContourPath":
        if max_step is not None:
            n = max(n, int(np.ceil(2.0 * np.pi * radius / max_step)))
        ts = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        pts = center + radius * np.exp(1j * ts)
        return ContourPath(points=pts.astype(complex))

    @property
    def re_max(self) -> float:
        return float(np.max(self.points.real))

    @property
    def im_max(self) -> float:
        return float(np.max(self.points.imag))

    @property
    def scale(self) -> float:
        span_re = np.ptp(self.points.real)
        span_im = np.ptp(self.points.imag)
        return float(max(span_re, span_im))

    def scaled_about_center(self, factor: float) -> "ContourPath":
        center = np.mean(self.points)
        return ContourPath(points=center + factor * (self.points - center))

    @property
    def winding(self) -> int | None:
        if self.args is None:
            return None
        total = _closed_arg_sum(self.args)
        return int(round(total / (2.0 * np.pi)))


def _initial_step(r_mid: float, x_far: float) -> float:
    """Safe initial contour spacing against phase aliasing.

    Far from the spectrum the Evans argument rotates almost purely (flat
    magnitude), at a rate that calibrates to ~3 r_mid / sqrt(2 x) per
    unit of contour length at distance x; the initial spacing keeps each
    true step under ~pi/4 so the adaptive refinement sees every turn."""
    rate = 3.0 * max(r_mid, 1.0) / np.sqrt(2.0 * max(x_far, 1.0))
    return min(0.35, 0.25 * np.pi / rate)


def default_contour(
    profile: VortexProfile,
    y_bound: float = DEFAULT_Y_BOUND,
    corner: float = CORNER_RADIUS,
) -> ContourPath:
    """Symmetric rectangle wide enough for every possible eigenvalue:
    |Re lambda| is bounded by 3*(mu - m), the height is the tracked axis
    window."""
    x = 3.0 * (profile.mu - profile.m)
    step = _initial_step(_default_r_mid(profile), x)
    return ContourPath.rounded_rectangle(
        -x, x, -y_bound, y_bound, corner, max_step=step
    )


def _wrapped_diffs(args: np.ndarray) -> np.ndarray:
    d = np.diff(np.concatenate([args, args[:1]]))
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def _closed_arg_sum(args: np.ndarray) -> float:
    return float(np.sum(_wrapped_diffs(args)))


# a sample whose log-magnitude dips this far below its neighbors' sits on
# a zero (|E| varies by many orders along large contours, so the test has
# to be local and in log space)
LOG_ZERO_MARGIN = np.log(1e6)


def _log_mags(vals) -> np.ndarray:
    out = np.empty(len(vals))
    for i, (v, lg) in enumerate(vals):
        av = abs(v)
        out[i] = np.log(av) + lg if av > 0.0 else -np.inf
    return out


def _refine_samples(
    points,
    evaluator,
    arg_step: float,
    max_points: int,
):
    """Insert chord midpoints until consecutive argument steps are below
    arg_step; returns (points list, (value, log) list).  Raises if the
    budget runs out or a sample sits on a zero."""
    pts = [complex(p) for p in points]
    vals = _eval_many(evaluator, pts)
    for _ in range(200):
        n = len(pts)
        args = np.angle(np.array([v for v, _ in vals]))
        d = _wrapped_diffs(args)
        # wrapped phase steps alias once the true step passes pi, so the
        # phase criterion alone can silently drop whole turns on a coarse
        # path; here the magnitude moves together with the phase
        # (exponential dichotomy), so large log-magnitude steps flag the
        # stretches where aliasing is possible
        lm = _log_mags(vals)
        with np.errstate(invalid="ignore"):
            dm = np.diff(np.append(lm, lm[0]))
            bad_mask = (np.abs(d) >= arg_step) | ~(np.abs(dm) < 1.0)
        bad = np.nonzero(bad_mask)[0]
        if bad.size == 0:
            break
        if n + bad.size > max_points:
            # runaway refinement means the argument swings wildly between
            # samples, which in practice is a zero hugging the path: let
            # the caller nudge the contour rather than fail outright
            raise _ZeroOnContour(pts[int(bad[0])])
        new_pts = [(pts[i] + pts[(i + 1) % n]) / 2.0 for i in bad]
        new_vals = _eval_many(evaluator, new_pts)
        for i, p, v in zip(bad[::-1], new_pts[::-1], new_vals[::-1]):
            pts.insert(int(i) + 1, p)
            vals.insert(int(i) + 1, v)
    else:
        raise _ZeroOnContour(pts[int(bad[0])])
    lm = _log_mags(vals)
    neighbor = np.maximum(np.roll(lm, 1), np.roll(lm, -1))
    dips = lm - neighbor
    if np.min(dips) < -LOG_ZERO_MARGIN:
        raise _ZeroOnContour(pts[int(np.argmin(dips))])
    return pts, vals


class _ZeroOnContour(Exception):
    def __init__(self, where):
        super().__init__(f"sample on a zero near {where}")
        self.where = where


def _refine_contour(
    contour: ContourPath,
    evaluator,
    arg_step: float = ARG_STEP_MAX,
    max_points: int = 8000,
) -> ContourPath:
    """Refined copy of the contour with Evans samples attached; rescales
    the contour about its center by ~1e-3 (alternating outward/inward, up
    to three times) if a sample lands on a zero."""
    nudges = (1.0 + CONTOUR_NUDGE, 1.0 - 2.0 * CONTOUR_NUDGE,
              1.0 + 3.0 * CONTOUR_NUDGE)
    path = contour
    for attempt in range(4):
        try:
            pts, vals = _refine_samples(
                path.points, evaluator, arg_step, max_points
            )
        except _ZeroOnContour as exc:
            if attempt == 3:
                raise WindingUnresolvedError(
                    f"winding unresolved: samples stay unresolvable near "
                    f"{exc.where:.4g} after three contour nudges"
                )
            path = contour.scaled_about_center(nudges[attempt])
            continue
        arr = np.array(pts, dtype=complex)
        values = np.array([v for v, _ in vals])
        logs = np.array([lg for _, lg in vals])
        args = np.angle(values)
        return ContourPath(points=arr, values=values, logs=logs, args=args)
    raise AssertionError("unreachable")


def winding_count(
    profile: VortexProfile,
    j: int,
    contour: ContourPath | None = None,
    evaluator=None,
    y_bound: float = DEFAULT_Y_BOUND,
    max_points: int = 8000,
) -> int:
    """Number of Evans zeros enclosed by the contour (argument principle)."""
    ev = _resolve_evaluator(profile, j, evaluator)
    if contour is None:
        contour = default_contour(profile, y_bound)
    refined = _refine_contour(contour, ev, max_points=max_points)
    total = _closed_arg_sum(refined.args)
    n = int(round(total / (2.0 * np.pi)))
    if abs(total / (2.0 * np.pi) - n) > 0.05:
        raise WindingUnresolvedError(
            f"winding unresolved: argument sum {total / (2 * np.pi):.3f} "
            "is not close to an integer"
        )
    return n


def _log_derivatives(pts, vals, evaluator, h: float) -> np.ndarray:
    """E'/E at the sample points by central differences of step h."""
    n = len(pts)
    side = _eval_many(evaluator, [p + h for p in pts] + [p - h for p in pts])
    out = np.empty(n, dtype=complex)
    for i in range(n):
        v0, l0 = vals[i]
        vp, lp = side[i]
        vm, lm = side[n + i]
        ratio_p = (vp / v0) * np.exp(lp - l0)
        ratio_m = (vm / v0) * np.exp(lm - l0)
        out[i] = (ratio_p - ratio_m) / (2.0 * h)
    return out


def _moment_chord(pts, vals, evaluator, k: int, scale: float) -> complex:
    """Chord-trapezoid quadrature of (1/2 pi i) lambda^k E'/E over the
    closed sampled path.  Only first-order accurate in the chord length
    near a zero, so callers must control the error (midpoint doubling)."""
    dlog = _log_derivatives(pts, vals, evaluator, FD_REL_STEP * scale)
    lam = np.array(pts, dtype=complex)
    g = (lam**k) * dlog if k else dlog
    lam_next = np.roll(lam, -1)
    g_next = np.roll(g, -1)
    integral = np.sum(0.5 * (g + g_next) * (lam_next - lam))
    return complex(integral / (2.0j * np.pi))


def _moment_on_path(
    pts,
    vals,
    evaluator,
    k: int,
    scale: float,
    rel_tol: float = 0.02,
    max_doublings: int = 4,
):
    """Chord-trapezoid moment with midpoint doubling until two successive
    levels agree to rel_tol (zeros close to the path make the plain chord
    rule badly biased, so an explicit convergence check is required)."""
    pts = list(pts)
    vals = list(vals)
    s = _moment_chord(pts, vals, evaluator, k, scale)
    for _ in range(max_doublings):
        n = len(pts)
        mids = [(pts[i] + pts[(i + 1) % n]) / 2.0 for i in range(n)]
        mvals = _eval_many(evaluator, mids)
        pts2: list[complex] = []
        vals2: list = []
        for i in range(n):
            pts2.append(pts[i])
            vals2.append(vals[i])
            pts2.append(mids[i])
            vals2.append(mvals[i])
        s2 = _moment_chord(pts2, vals2, evaluator, k, scale)
        done = abs(s2 - s) < rel_tol * max(1.0, abs(s2))
        pts, vals, s = pts2, vals2, s2
        if done:
            break
    return s


def _circle_moment(
    evaluator, center: complex, radius: float, k: int, n: int = 64,
    max_step: float | None = None,
) -> complex:
    """Spectrally accurate moment over a circle via the periodic
    trapezoid rule in the angle variable."""
    if max_step is not None:
        n = max(n, int(np.ceil(4.0 * np.pi * radius / max_step)))
    for offset in (0.0, np.pi / n):
        ths = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False) + offset
        lam = center + radius * np.exp(1j * ths)
        vals = _eval_many(evaluator, list(lam))
        lm = _log_mags(vals)
        neighbor = np.maximum(np.roll(lm, 1), np.roll(lm, -1))
        if np.min(lm - neighbor) < -LOG_ZERO_MARGIN:
            continue  # a sample sits on a zero; rotate the sampling
        dlog = _log_derivatives(
            list(lam), vals, evaluator, FD_REL_STEP * 2.0 * radius
        )
        g = (lam**k) * dlog if k else dlog
        dlam = 1j * radius * np.exp(1j * ths)
        integral = np.sum(g * dlam) * (2.0 * np.pi / n)
        return complex(integral / (2.0j * np.pi))
    raise RefinementFailedError(
        f"refinement failed: zero on the sampling circle at {center:.5g}"
    )


def moment(
    profile: VortexProfile,
    j: int,
    contour: ContourPath,
    k: int,
    evaluator=None,
    max_points: int = 8000,
) -> complex:
    """Moment s_k = (1/2 pi i) oint lambda^k E'/E dlambda.

    E' is computed by central differences with step 1e-5 * contour scale.
    s_0 is recomputed alongside and compared with the winding count; a
    mismatch above 0.1 emits DerivativeNoiseWarning."""
    ev = _resolve_evaluator(profile, j, evaluator)
    refined = _refine_contour(contour, ev, arg_step=ARG_STEP_MOMENT,
                              max_points=max_points)
    pts = list(refined.points)
    vals = list(zip(refined.values, refined.logs))
    s_k = _moment_on_path(pts, vals, ev, k, refined.scale)
    s_0 = s_k if k == 0 else _moment_on_path(pts, vals, ev, 0, refined.scale)
    w = refined.winding
    if abs(s_0 - w) >= 0.1:
        warnings.warn(
            f"derivative noise: s_0 = {s_0:.3f} vs winding {w}",
            DerivativeNoiseWarning,
            stacklevel=2,
        )
    return s_k


# --- axis scan ----------------------------------------------------------------


@dataclass(frozen=True)
class AxisZero:
    """A zero of the real axis-restriction: lam purely imaginary."""

    lam: complex
    multiplicity: int

    @property
    def beta(self) -> float:
        return float(self.lam.imag)


@dataclass(frozen=True)
class AxisScan:
    """Scan of E_j along a segment of the imaginary axis.

    values are the real samples normalized by e^{max log_scale}; ambiguous
    lists beta-intervals where a near-tangency could not be resolved."""

    j: int
    mu: float
    betas: np.ndarray
    values: np.ndarray
    ref_log: float
    zeros: tuple[AxisZero, ...]
    ambiguous: tuple[tuple[float, float], ...]

    @property
    def total_multiplicity(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    def zeros_within(self, beta_bound: float) -> tuple[AxisZero, ...]:
        # small absolute margin so a zero polished to just past the bound
        # (within root tolerance) still counts as on the closed interval
        bound = beta_bound + 1e-5
        return tuple(z for z in self.zeros if abs(z.beta) <= bound)


def _axis_interval(interval) -> tuple[float, float]:
    out = []
    for b in interval:
        b = complex(b)
        if b.imag == 0.0:
            # plain real number: interpreted directly as Im(lambda)
            out.append(b.real)
        elif abs(b.real) <= 1e-12 * max(1.0, abs(b)):
            out.append(b.imag)
        else:
            raise ValueError(
                "axis scan interval bounds must be purely imaginary"
            )
    lo_b, hi_b = float(out[0]), float(out[1])
    if hi_b <= lo_b:
        lo_b, hi_b = hi_b, lo_b
    return lo_b, hi_b


def _real_restriction(evaluator):
    """beta -> normalized-later (value, log) of E at i*beta, real part."""

    def f(beta: float):
        v, lg = evaluator(1j * beta)
        return v.real, lg

    return f


def axis_zero_scan(
    profile: VortexProfile,
    j: int,
    interval=( -1j * DEFAULT_Y_BOUND, 1j * DEFAULT_Y_BOUND),
    n_samples: int = DEFAULT_AXIS_SAMPLES,
    evaluator=None,
) -> AxisScan:
    """Zeros of the (real) Evans restriction to the imaginary axis.

    Sign changes between samples are bracketed and polished on the true
    function; runs of small samples without a sign change trigger a x100
    local mesh which either resolves a close pair of simple zeros, a
    double zero (reported with multiplicity 2), nothing, or - failing all
    of those - an ambiguity flag for the interval."""
    ev = _resolve_evaluator(profile, j, evaluator)
    f = _real_restriction(ev)
    lo, hi = _axis_interval(interval)
    # pad the sampled range slightly so a zero sitting exactly on an
    # interval endpoint still gets a sign-change bracket around it
    pad = 2e-3 * max(hi - lo, 1.0)
    lo -= pad
    hi += pad
    betas = np.linspace(lo, hi, int(n_samples))
    raw = _eval_many(f, betas)
    logs = np.array([lg for _, lg in raw])
    ref = float(np.max(logs))
    F = np.array([v for v, _ in raw]) * np.exp(logs - ref)

    med = float(np.median(np.abs(F)))
    tol = ZERO_REL_TOL * med

    def g(beta: float) -> float:
        v, lg = f(float(beta))
        return v * np.exp(lg - ref)

    zeros: list[AxisZero] = []
    ambiguous: list[tuple[float, float]] = []
    spacing = (hi - lo) / (len(betas) - 1)

    small = np.abs(F) < tol
    i = 0
    n = len(betas)
    while i < n - 1:
        if small[i]:
            # cluster of small samples: find its extent, look at flanking signs
            k = i
            while k < n and small[k]:
                k += 1
            a = max(i - 1, 0)
            b = min(k, n - 1)
            zeros_here, ambig = _resolve_cluster(
                g, betas[a], betas[b], F[a], F[b], spacing, tol
            )
            zeros.extend(zeros_here)
            if ambig is not None:
                ambiguous.append(ambig)
            i = k  # resume at the first non-small sample so the next
            continue  # bracket (k, k+1) still gets its sign check
        if F[i] * F[i + 1] < 0.0 and not small[i + 1]:
            root = brentq(g, betas[i], betas[i + 1], xtol=1e-12, rtol=1e-14)
            zeros.append(AxisZero(lam=1j * float(root), multiplicity=1))
        i += 1

    # near-tangency without any sample actually below tol: local minima of
    # |F| that dip well below the neighborhood scale get the fine treatment
    mags = np.abs(F)
    for i in range(1, n - 1):
        if small[i - 1] or small[i] or small[i + 1]:
            continue
        if mags[i] < mags[i - 1] and mags[i] < mags[i + 1]:
            if F[i - 1] * F[i + 1] > 0 and mags[i] < 1e-3 * med:
                zeros_here, ambig = _resolve_cluster(
                    g, betas[i - 1], betas[i + 1], F[i - 1], F[i + 1],
                    spacing, tol,
                )
                zeros.extend(zeros_here)
                if ambig is not None:
                    ambiguous.append(ambig)

    zeros = _dedupe_zeros(zeros, 1e-7 * max(1.0, hi - lo))
    return AxisScan(
        j=int(j),
        mu=profile.mu,
        betas=betas,
        values=F,
        ref_log=ref,
        zeros=tuple(zeros),
        ambiguous=tuple(ambiguous),
    )


def _resolve_cluster(g, b_lo, b_hi, f_lo, f_hi, spacing, tol):
    """Fine x100 mesh over a small-|F| window; returns (zeros, ambiguity)."""
    width = b_hi - b_lo
    if width <= 0:
        return [], None
    fine = np.linspace(b_lo, b_hi, max(int(100 * width / spacing), 50))
    Ff = np.array([g(b) for b in fine])
    crossings = np.nonzero(Ff[:-1] * Ff[1:] < 0.0)[0]
    out = []
    if crossings.size:
        for c in crossings:
            root = brentq(g, fine[c], fine[c + 1], xtol=1e-12, rtol=1e-14)
            out.append(AxisZero(lam=1j * float(root), multiplicity=1))
        return out, None
    if f_lo * f_hi < 0.0:
        root = brentq(g, b_lo, b_hi, xtol=1e-12, rtol=1e-14)
        return [AxisZero(lam=1j * float(root), multiplicity=1)], None
    # same sign on both flanks and no crossing inside: double-zero candidate.
    # locate the |F| minimum, then find the zero of dF/dbeta (which crosses
    # simply at a tangency) by central differences of the true function.
    k_min = int(np.argmin(np.abs(Ff)))
    dstep = max((fine[1] - fine[0]) * 2.0, 1e-6)

    def dg(beta):
        return (g(beta + dstep) - g(beta - dstep)) / (2.0 * dstep)

    a = fine[max(k_min - 3, 0)]
    b = fine[min(k_min + 3, len(fine) - 1)]
    try:
        da, db = dg(a), dg(b)
        if da * db < 0:
            vertex = brentq(dg, a, b, xtol=1e-12, rtol=1e-14)
        else:
            vertex = fine[k_min]
    except ValueError:
        vertex = fine[k_min]
    v_min = g(vertex)
    if abs(v_min) < tol:
        return [AxisZero(lam=1j * float(vertex), multiplicity=2)], None
    if abs(v_min) < 10.0 * tol:
        return [], (float(b_lo), float(b_hi))
    return [], None


def _dedupe_zeros(zeros, eps):
    zeros = sorted(zeros, key=lambda z: z.beta)
    out: list[AxisZero] = []
    for z in zeros:
        if out and abs(z.beta - out[-1].beta) < eps:
            if z.multiplicity > out[-1].multiplicity:
                out[-1] = z
            continue
        out.append(z)
    return out


# --- counting and off-axis refinement ----------------------------------------


def unstable_count(
    profile: VortexProfile,
    j: int,
    contour: ContourPath | None = None,
    axis: AxisScan | None = None,
    evaluator=None,
    y_bound: float = DEFAULT_Y_BOUND,
) -> int:
    """n_su = winding - (axis multiplicities inside the contour).

    Must come out even and nonnegative (off-axis zeros pair across the
    axis); otherwise an axis zero or a contour zero was missed and
    InconsistentCountError is raised."""
    ev = _resolve_evaluator(profile, j, evaluator)
    if contour is None:
        contour = default_contour(profile, y_bound)
    w = winding_count(profile, j, contour, evaluator=ev)
    if axis is None:
        b = contour.im_max
        axis = axis_zero_scan(profile, j, (-1j * b, 1j * b), evaluator=ev)
    n_s = sum(z.multiplicity for z in axis.zeros_within(contour.im_max))
    n_su = w - n_s
    if n_su < 0 or n_su % 2 != 0:
        raise InconsistentCountError(
            f"inconsistent count: winding {w} vs axis multiplicity {n_s} "
            f"(j={j}, mu={profile.mu:.4f})"
        )
    return n_su


def _winding_and_samples(path, ev, max_points=6000, arg_step=ARG_STEP_MOMENT):
    refined = _refine_contour(path, ev, arg_step=arg_step, max_points=max_points)
    pts = list(refined.points)
    vals = list(zip(refined.values, refined.logs))
    return refined.winding, pts, vals, refined.scale


def _deflate_axis(ev, betas):
    """Wrap an evaluator so the given axis zeros are divided out.

    The refinement machinery works on the right half plane, whose
    boundary runs right next to the axis zeros; dividing by
    prod_k (lambda - i beta_k) (in log form, so nothing overflows)
    removes exactly those zeros and leaves a function that is smooth and
    nonvanishing near the axis, so windings and moments see only the
    off-axis zeros being hunted."""
    if not betas:
        return ev

    def deflated(lam: complex):
        v, lg = ev(lam)
        for b in betas:
            d = complex(lam) - 1j * b
            mag = abs(d)
            v = v * (d.conjugate() / mag)
            lg = lg - np.log(mag)
        return v, lg

    return deflated


def _polish_zero(ev, z0: complex, r0: float, tol: float,
                 max_step: float | None = None) -> complex:
    """Shrink circles around an estimated zero until the first-moment
    position stabilizes to tol; re-verifies winding 1 on every circle."""
    z, r = complex(z0), float(r0)
    n_expand = 0
    for _ in range(60):
        r = max(r, 0.25 * tol)
        path = ContourPath.circle(z, r, n=32, max_step=max_step)
        try:
            w, pts, vals, scale = _winding_and_samples(path, ev)
        except WindingUnresolvedError:
            r *= 1.37
            continue
        if w == 0:
            n_expand += 1
            if n_expand > 5:
                raise RefinementFailedError(
                    f"refinement failed: zero lost near {z:.5g}"
                )
            r *= 4.0
            continue
        n_expand = 0
        if w > 1:
            # try to isolate a single zero before giving up on the circle
            if r > 2.0 * tol:
                r *= 0.55
                continue
            raise _MultipleZerosInCircle(z, r)
        z_new = complex(_circle_moment(ev, z, r, 1, max_step=max_step))
        shift = abs(z_new - z)
        # the moment estimate carries an O(r^2) quadrature bias, so the
        # position is trusted only once the circle itself is small
        if shift < tol and r <= 4.5 * tol:
            return z_new
        z = z_new
        r = max(3.0 * shift, r / 3.0, 1.5 * tol)
    raise RefinementFailedError(f"refinement failed: no convergence at {z:.5g}")


def refine_unstable(
    profile: VortexProfile,
    j: int,
    contour: ContourPath | None = None,
    n_su: int | None = None,
    evaluator=None,
    position_tol: float = 1e-3,
    y_bound: float = DEFAULT_Y_BOUND,
    axis: AxisScan | None = None,
) -> list[complex]:
    """Locate the right-half-plane zeros behind a nonzero n_su.

    The known axis zeros are first divided out of the Evans function so
    the right-half-plane boundary (which hugs the imaginary axis) stays
    well conditioned; a box is then split recursively (guided by first
    and second moments) until each piece holds one zero, which is pinned
    by shrinking circles.  Returns representatives with Re > 0; mirror
    partners are implied by the axis-reflection symmetry."""
    ev = _resolve_evaluator(profile, j, evaluator)
    if contour is None:
        contour = default_contour(profile, y_bound)
    if axis is None:
        b = contour.im_max
        axis = axis_zero_scan(profile, j, (-1j * b, 1j * b), evaluator=ev)
    if n_su is None:
        n_su = unstable_count(profile, j, contour, axis=axis, evaluator=ev)
    if n_su < 2:
        raise ValueError("refine_unstable requires n_su >= 2")
    ev = _deflate_axis(ev, tuple(z.beta for z in axis.zeros))
    n_rep = n_su // 2
    x_hi = contour.re_max
    y_hi = contour.im_max
    step0 = _initial_step(_default_r_mid(profile), x_hi)
    boxes = [(position_tol, x_hi, -y_hi, y_hi)]
    reps: list[complex] = []
    budget = 80
    while boxes:
        budget -= 1
        if budget < 0:
            raise RefinementFailedError(
                "refinement failed: box subdivision budget exhausted"
            )
        a, b, c, d = boxes.pop()
        corner = min(CORNER_RADIUS, 0.2 * min(b - a, d - c))
        path = ContourPath.rounded_rectangle(a, b, c, d, corner,
                                             max_step=step0)
        w, pts, vals, scale = _winding_and_samples(path, ev)
        if w == 0:
            continue
        if len(reps) + w > n_rep:
            raise RefinementFailedError(
                "refinement failed: more zeros than expected in the "
                "right half plane"
            )
        candidates: list[complex] = []
        if w == 1:
            candidates = [
                complex(_moment_on_path(pts, vals, ev, 1, scale,
                                        rel_tol=0.05, max_doublings=3))
            ]
        elif w == 2:
            s1 = complex(_moment_on_path(pts, vals, ev, 1, scale,
                                         rel_tol=0.05, max_doublings=3))
            s2 = complex(_moment_on_path(pts, vals, ev, 2, scale,
                                         rel_tol=0.05, max_doublings=3))
            disc = np.sqrt(2.0 * s2 - s1 * s1)
            z_a, z_b = (s1 + disc) / 2.0, (s1 - disc) / 2.0
            if abs(z_a - z_b) > 4.0 * position_tol:
                candidates = [z_a, z_b]
        if candidates:
            r_box = 0.25 * min(b - a, d - c)
            if len(candidates) > 1:
                sep = min(
                    abs(z1 - z2)
                    for i1, z1 in enumerate(candidates)
                    for z2 in candidates[i1 + 1 :]
                )
                r_box = min(r_box, 0.4 * sep)
            ok = True
            got: list[complex] = []
            for z in candidates:
                zc = complex(min(max(z.real, a), b), min(max(z.imag, c), d))
                try:
                    zp = _polish_zero(
                        ev, zc, max(r_box, 4 * position_tol), position_tol,
                        max_step=step0,
                    )
                except _MultipleZerosInCircle:
                    ok = False
                    break
                if zp.real < 0:
                    # converged onto the mirror partner; report the
                    # right-half-plane representative of the pair
                    zp = -zp.conjugate()
                if any(abs(zp - prev) < 2.0 * position_tol
                       for prev in reps + got):
                    raise RefinementFailedError(
                        f"refinement failed: duplicate zero near {zp:.5g}"
                    )
                got.append(zp)
            if ok:
                reps.extend(got)
                continue
        boxes.extend(_split_box(a, b, c, d, ev))
    if len(reps) != n_rep:
        raise RefinementFailedError(
            f"refinement failed: found {len(reps)} of {n_rep} zeros"
        )
    reps.sort(key=lambda z: (z.imag, z.real))
    return reps


def _split_box(a, b, c, d, ev):
    """Bisect along the longer side, moving the split line if the Evans
    magnitude dips near zero on it (a zero on the shared edge would make
    both children unresolvable)."""
    horizontal = (b - a) >= (d - c)
    ts = np.linspace(0.05, 0.95, 9)
    for frac in (0.5, 0.57, 0.43, 0.64, 0.36):
        if horizontal:
            mid = a + frac * (b - a)
            seg = [complex(mid, c + t * (d - c)) for t in ts]
        else:
            mid = c + frac * (d - c)
            seg = [complex(a + t * (b - a), mid) for t in ts]
        lm = _log_mags(_eval_many(ev, seg))
        if np.min(lm) > np.median(lm) - np.log(1e4):
            if horizontal:
                return [(a, mid, c, d), (mid, b, c, d)]
            return [(a, b, c, mid), (a, b, mid, d)]
    # no clean split line found; fall back to the plain halves
    if horizontal:
        mid = 0.5 * (a + b)
        return [(a, mid, c, d), (mid, b, c, d)]
    mid = 0.5 * (c + d)
    return [(a, b, c, mid), (a, b, mid, d)]


# --- per-mode orchestration ---------------------------------------------------


@dataclass(frozen=True)
class ModeScanReport:
    """Everything the contour machinery can say about one mode."""

    j: int
    mu: float
    winding: int
    axis_zeros: tuple[AxisZero, ...]
    n_su: int
    unstable: tuple[complex, ...]
    ambiguous: tuple[tuple[float, float], ...] = ()

    def to_json_dict(self) -> dict:
        unstable = []
        for z in self.unstable:
            unstable.append({"re": z.real, "im": z.imag})
            unstable.append({"re": -z.real, "im": z.imag})
        unstable.sort(key=lambda d: (d["im"], d["re"]))
        return {
            "winding": int(self.winding),
            "axis_zeros": [
                {"im": z.beta, "mult": int(z.multiplicity)}
                for z in self.axis_zeros
            ],
            "n_su": int(self.n_su),
            "unstable": unstable,
        }


def scan_mode(
    profile: VortexProfile,
    j: int,
    y_bound: float = DEFAULT_Y_BOUND,
    n_axis: int = DEFAULT_AXIS_SAMPLES,
    contour: ContourPath | None = None,
    evaluator=None,
) -> ModeScanReport:
    """Axis scan + winding + off-axis refinement for one azimuthal mode."""
    ev = _resolve_evaluator(profile, j, evaluator)
    if contour is None:
        contour = default_contour(profile, y_bound)
    axis = axis_zero_scan(
        profile, j, (-1j * contour.im_max, 1j * contour.im_max), n_axis, ev
    )
    w = winding_count(profile, j, contour, evaluator=ev)
    n_s = sum(z.multiplicity for z in axis.zeros_within(contour.im_max))
    n_su = w - n_s
    if n_su < 0 or n_su % 2 != 0:
        raise InconsistentCountError(
            f"inconsistent count: winding {w} vs axis multiplicity {n_s} "
            f"(j={j}, mu={profile.mu:.4f})"
        )
    unstable: tuple[complex, ...] = ()
    if n_su >= 2:
        unstable = tuple(
            refine_unstable(profile, j, contour, n_su, evaluator=ev,
                            axis=axis)
        )
    return ModeScanReport(
        j=int(j),
        mu=profile.mu,
        winding=w,
        axis_zeros=axis.zeros,
        n_su=n_su,
        unstable=unstable,
        ambiguous=axis.ambiguous,
    )
