"""Signatures of imaginary eigenvalues, eigenvalue-branch tracking in the
chemical potential, and a completeness certificate for the instability
search.

Purely imaginary zeros of the per-mode Evans function carry a signature:
the sign of the energy form restricted to the eigenspace, computable from
the eigenfunction as sign(-Im(lambda) * Q) with Q = integral of
(|y+|^2 - |y-|^2) r dr.  Opposite-signature collisions are the only route
off the imaginary axis, so following every negative-signature branch
finds every instability; the certificate cross-checks the recorded
excursions against independent winding counts of the Evans function.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import evans as ev_mod
from .linearized_system import (
    ModeSystem,
    NonSimpleEigenvalueError,
    NotAnEigenvalueError,
    StiffSegmentError,
    eigenfunction_solve,
)
from .profile import VortexProfile, continue_branch, seed_profile

SIG_POSITIVE = "positive"
SIG_NEGATIVE = "negative"
SIG_INDEFINITE = "indefinite"
SIG_OFF_AXIS = "zero"
SIG_AT_ORIGIN = "at-origin"

DEFAULT_TRACK_STEP = 0.05
DEFAULT_COLLISION_RADIUS = 0.05
DEFAULT_BOX_HALF = 0.1
DEFAULT_Y_BOUND = ev_mod.DEFAULT_Y_BOUND


@dataclass(frozen=True)
class EigRecord:
    """One located eigenvalue of the mode-j linearization."""

    lam: complex
    j: int
    mu: float
    multiplicity: int = 1
    signature: str = SIG_INDEFINITE

    @property
    def beta(self) -> float:
        return float(self.lam.imag)

    @property
    def on_axis(self) -> bool:
        return self.signature != SIG_OFF_AXIS


@dataclass(frozen=True)
class TrackEvent:
    """Something qualitative that happened along a branch."""

    kind: str  # collision | split | rejoin | zero-crossing | track-lost
    mu: float
    lam: complex
    partner_signature: str | None = None
    detail: str = ""


# --- signature ----------------------------------------------------------------


def energy_split(eigenfunction) -> tuple[float, float]:
    """(Q, norm2) with Q = int (|y+|^2 - |y-|^2) r dr on the stored mesh."""
    r = eigenfunction.r
    a = np.abs(eigenfunction.y_plus) ** 2
    b = np.abs(eigenfunction.y_minus) ** 2
    Q = float(np.trapezoid((a - b) * r, r))
    n2 = float(np.trapezoid((a + b) * r, r))
    return Q, n2


def signature_of(j: int, lam: complex, eigenfunction) -> str:
    """Signature of an imaginary eigenvalue from its eigenfunction.

    sign(-beta * Q) equals the sign of the energy form on the eigenspace;
    |Q| below 1e-8 of the squared norm is reported as indefinite (the
    form degenerates there, e.g. at a collision)."""
    lam = complex(lam)
    if abs(lam.real) > 1e-8 * max(1.0, abs(lam)):
        raise ValueError("signature is defined for imaginary eigenvalues")
    beta = lam.imag
    if abs(beta) < 1e-9:
        return SIG_AT_ORIGIN
    Q, n2 = energy_split(eigenfunction)
    if abs(Q) < 1e-8 * n2:
        return SIG_INDEFINITE
    return SIG_POSITIVE if -beta * Q > 0.0 else SIG_NEGATIVE


def signature_at(profile: VortexProfile, j: int, lam: complex) -> str:
    """Solve for the eigenfunction at lam and classify its signature.

    Degenerate or unresolvable matchings are reported as indefinite
    rather than raised, so trackers can step over collision instants."""
    try:
        eig = eigenfunction_solve(ModeSystem(profile, j=j, lam=complex(lam)))
    except (NotAnEigenvalueError, NonSimpleEigenvalueError,
            StiffSegmentError):
        return SIG_INDEFINITE
    return signature_of(j, lam, eig)


def off_axis_energy_defect(profile: VortexProfile, j: int,
                           lam: complex) -> float:
    """|lam * Q| / norm^2 for an off-axis eigenvalue; near zero because
    the energy form vanishes identically off the axis."""
    eig = eigenfunction_solve(ModeSystem(profile, j=j, lam=complex(lam)))
    Q, n2 = energy_split(eig)
    return abs(complex(lam)) * abs(Q) / n2


# --- seed table ---------------------------------------------------------------


def seed_table(m: int, y_bound: float = DEFAULT_Y_BOUND) -> list[EigRecord]:
    """All imaginary eigenvalues at the branch endpoint mu = m + 1.

    At zero amplitude the two channels decouple into radial oscillator
    problems; for each azimuthal index j > 0 the eigenvalues form two
    families, Im(lam) = -(j + 2n) from the + channel (always positive
    signature) and Im(lam) = -j + 2n (j < m) or j - 2m + 2n (j >= m)
    from the - channel, whose signature is the sign of Im(lam)."""
    if m not in (1, 2, 3):
        raise ValueError("seed table is provided for m in {1, 2, 3}")
    mu0 = float(m + 1)
    out: list[EigRecord] = []
    for j in range(1, 2 * m + 1):
        n = 0
        while True:
            beta = -float(j + 2 * n)
            if beta < -y_bound - 1e-9:
                break
            out.append(EigRecord(1j * beta, j, mu0, 1, SIG_POSITIVE))
            n += 1
        n = 0
        while True:
            beta = float(-j + 2 * n if j < m else j - 2 * m + 2 * n)
            if beta > y_bound + 1e-9:
                break
            if beta == 0.0:
                sig = SIG_AT_ORIGIN
            elif beta < 0.0:
                sig = SIG_NEGATIVE
            else:
                sig = SIG_POSITIVE
            out.append(EigRecord(1j * beta, j, mu0, 1, sig))
            n += 1
    out.sort(key=lambda rec: (rec.j, rec.beta))
    return out


def negative_seeds(m: int, y_bound: float = DEFAULT_Y_BOUND) -> list[EigRecord]:
    """The branches that must be tracked: every instability starts with a
    collision involving one of these."""
    return [rec for rec in seed_table(m, y_bound)
            if rec.signature == SIG_NEGATIVE]


# --- profiles along the branch ------------------------------------------------


class ProfileBranch:
    """Profiles on demand along one m-branch, warm-starting every
    continuation from the nearest already-computed lower-mu profile."""

    def __init__(self, m: int, seed_eps: float = 0.1):
        self.m = int(m)
        self._eps = float(seed_eps)
        self._mus: list[float] = []
        self._profiles: dict[float, VortexProfile] = {}

    def _from_seed(self, mu_target: float) -> VortexProfile:
        # a fresh seed's first corrected point sits at mu0 + O(eps^2),
        # so shrink eps until the continuation can land on the target
        eps = self._eps
        for _ in range(40):
            prof = continue_branch(seed_profile(self.m, eps),
                                   mu_target)[-1].profile
            if prof.mu <= mu_target + 1e-9:
                return prof
            eps *= 0.5
        raise ValueError(f"cannot seed the branch below mu = {mu_target:.6g}")

    def at(self, mu: float) -> VortexProfile:
        key = round(float(mu), 9)
        hit = self._profiles.get(key)
        if hit is not None:
            return hit
        i = bisect.bisect_right(self._mus, key + 1e-12)
        if i > 0:
            start: VortexProfile = self._profiles[self._mus[i - 1]]
            if key > start.mu + 1e-12:
                prof = continue_branch(start, key)[-1].profile
            else:
                prof = start
        else:
            prof = self._from_seed(key)
        bisect.insort(self._mus, key)
        self._profiles[key] = prof
        return prof


def default_mu_grid(m: int, mu_max: float,
                    step: float = DEFAULT_TRACK_STEP) -> np.ndarray:
    """The canonical tracking grid: from the branch endpoint m + 1 up to
    mu_max in steps of `step` (endpoints included)."""
    return np.arange(float(m + 1), float(mu_max) + 0.5 * step, step)


# --- track container ----------------------------------------------------------


@dataclass
class BranchTrack:
    """One eigenvalue branch followed along the mu grid."""

    m: int
    j: int
    seed: EigRecord
    records: list[EigRecord] = field(default_factory=list)
    events: list[TrackEvent] = field(default_factory=list)
    lost: bool = False

    @property
    def mu_max(self) -> float:
        return self.records[-1].mu if self.records else self.seed.mu

    def off_axis_intervals(self) -> list[tuple[float, float]]:
        """mu intervals where the branch sits off the imaginary axis."""
        out: list[tuple[float, float]] = []
        start = None
        end = None
        for rec in self.records:
            if rec.signature == SIG_OFF_AXIS:
                if start is None:
                    start = rec.mu
                end = rec.mu
            elif start is not None:
                out.append((start, end))
                start = None
        if start is not None:
            out.append((start, end))
        return out

    def off_axis_at(self, mu: float) -> EigRecord | None:
        """The off-axis record nearest to mu if the track is off the axis
        there, else None."""
        best = None
        for a, b in self.off_axis_intervals():
            if a - 1e-9 <= mu <= b + 1e-9:
                cand = [r for r in self.records
                        if r.signature == SIG_OFF_AXIS
                        and a - 1e-9 <= r.mu <= b + 1e-9]
                best = min(cand, key=lambda r: abs(r.mu - mu))
        return best

    def cycles(self) -> int:
        """Number of completed split ... rejoin excursions."""
        n = 0
        open_split = False
        for e in self.events:
            if e.kind == "split":
                open_split = True
            elif e.kind == "rejoin" and open_split:
                n += 1
                open_split = False
        return n

    def rows(self) -> list[tuple]:
        """(mu, j, re, im, signature, event) rows; each event is attached
        to the first record at or after the event's mu."""
        out = []
        ev_sorted = sorted(self.events, key=lambda e: e.mu)
        k = 0
        for rec in self.records:
            kinds = []
            while k < len(ev_sorted) and ev_sorted[k].mu <= rec.mu + 1e-12:
                kinds.append(ev_sorted[k].kind)
                k += 1
            out.append((rec.mu, rec.j, rec.lam.real, rec.lam.imag,
                        rec.signature, "+".join(kinds)))
        if k < len(ev_sorted) and out:
            last = out[-1]
            tail = [e.kind for e in ev_sorted[k:]]
            joined = "+".join(([last[5]] if last[5] else []) + tail)
            out[-1] = last[:5] + (joined,)
        return out


# --- local root helpers -------------------------------------------------------


def _axis_fun(ev):
    """Normalized real restriction: beta -> Re E(i beta) x positive scale."""

    def g(beta: float, ref: float) -> float:
        v, lg = ev(1j * float(beta))
        return float(v.real) * float(np.exp(min(lg - ref, 60.0)))

    return g


def _quick_root(ev, pred: float, d0: float) -> float | None:
    """Bracket the axis zero near the prediction and refine by Brent;
    None when no sign change shows up in three widening attempts."""
    g = _axis_fun(ev)
    d = max(float(d0), 1e-4)
    for _ in range(3):
        a, b = pred - d, pred + d
        va, la = ev(1j * a)
        vb, lb = ev(1j * b)
        ref = max(la, lb)
        fa = float(va.real) * float(np.exp(la - ref))
        fb = float(vb.real) * float(np.exp(lb - ref))
        if fa == 0.0:
            return float(a)
        if fb == 0.0:
            return float(b)
        if fa * fb < 0.0:
            return float(brentq(lambda x: g(x, ref), a, b,
                                xtol=1e-10, rtol=8.9e-16))
        d *= 2.5
    return None


def _local_axis_zeros(ev, center: float, half_width: float,
                      n: int = 31) -> list[float]:
    """Simple zeros of the real axis restriction in a local window."""
    betas = np.linspace(center - half_width, center + half_width, n)
    raw = [ev(1j * float(b)) for b in betas]
    ref = max(lg for _, lg in raw)
    F = np.array([float(v.real) * float(np.exp(lg - ref)) for v, lg in raw])
    g = _axis_fun(ev)
    roots: list[float] = []
    for i in range(n - 1):
        if F[i] == 0.0:
            roots.append(float(betas[i]))
        elif F[i] * F[i + 1] < 0.0:
            roots.append(float(brentq(lambda x: g(x, ref),
                                      betas[i], betas[i + 1],
                                      xtol=1e-10, rtol=8.9e-16)))
    if F[-1] == 0.0:
        roots.append(float(betas[-1]))
    return roots


def _quadratic_roots(ev, center: complex, rho: float,
                     rounds: int = 5) -> tuple[complex, complex] | None:
    """Roots of a local quadratic model of the evaluator around a
    nearly-double zero.

    Six samples on a circle are least-squares fitted by a z^2 + b z + c;
    each round re-centers on the root midpoint and shrinks the circle
    toward the root separation, so the model bias from distant zeros
    dies out even when the separation is far below the starting rho."""
    z0 = complex(center)
    rho = float(rho)
    roots = None
    for _ in range(rounds):
        pts = [z0 + rho * np.exp(2j * np.pi * k / 6.0) for k in range(6)]
        samples = [ev(z) for z in pts]
        ref = max(lg for _, lg in samples)
        F = np.array([v * np.exp(lg - ref) for v, lg in samples])
        A = np.array([[z * z, z, 1.0] for z in pts])
        coef, *_ = np.linalg.lstsq(A, F, rcond=None)
        a, b, c = coef
        if abs(a) * rho < 1e-8 * max(abs(b), 1e-300):
            return None  # locally linear: not a pair
        disc = np.sqrt(b * b - 4.0 * a * c)
        r1 = (-b + disc) / (2.0 * a)
        r2 = (-b - disc) / (2.0 * a)
        roots = (complex(r1), complex(r2))
        mid = 0.5 * (r1 + r2)
        sep = abs(r1 - r2)
        if abs(mid - z0) > 3.0 * rho:
            return None  # model points far outside its trust region
        z0 = complex(mid)
        rho = float(min(max(1.5 * sep, 0.2 * rho, 1e-6), rho))
    return roots


def _pair_from_box(ev, beta_c: float, half: float,
                   known_axis: tuple[float, ...]) -> complex | None:
    """Representative (Re >= 0) of the conjugate-pair zeros inside the
    box |Re| < half, |Im - beta_c| < half, or None unless the box holds
    exactly the pair (winding two after axis deflation)."""
    dev = ev_mod._deflate_axis(ev, known_axis)
    box = ev_mod.ContourPath.rounded_rectangle(
        -half, half, beta_c - half, beta_c + half,
        corner=min(0.2 * half, 0.02), n_total=64,
    )
    try:
        w, _, _, _ = ev_mod._winding_and_samples(box, dev)
    except (ev_mod.WindingUnresolvedError, ev_mod.RefinementFailedError):
        return None
    if w != 2:
        return None
    rr = _quadratic_roots(dev, 1j * beta_c, 0.6 * half)
    if rr is None:
        return None
    r1, r2 = rr
    if max(abs(r1 - 1j * beta_c), abs(r2 - 1j * beta_c)) > 2.0 * half:
        return None
    z = r1 if r1.real >= r2.real else r2
    if z.real < 1e-4:
        return complex(max(z.real, 0.0), z.imag)  # straddling
    sep = abs(r1 - r2)
    try:
        z = ev_mod._polish_zero(dev, z, max(min(0.8 * sep, 0.02), 1e-5),
                                1e-7)
    except (ev_mod._MultipleZerosInCircle, ev_mod.WindingUnresolvedError,
            ev_mod.RefinementFailedError):
        return complex(z)  # keep the quadratic-model position
    if z.real < 0.0:
        z = -z.conjugate()
    return z


# --- branch tracking ----------------------------------------------------------


def track_branch(
    j: int,
    seed: EigRecord,
    mu_grid,
    *,
    m: int | None = None,
    profiles: ProfileBranch | None = None,
    collision_radius: float = DEFAULT_COLLISION_RADIUS,
    box_half: float = DEFAULT_BOX_HALF,
    fine_factor: int = 10,
    fine_window: float = 0.5,
    monitor_every: int = 5,
    signature_every: int = 1,
    rejoin_tol: float = 1e-3,
) -> BranchTrack:
    """Follow one eigenvalue branch of mode j from its mu = m + 1 seed.

    On the axis the zero of the real Evans restriction is continued by
    secant prediction plus local bracketing, with a periodic wider scan
    watching for approaching companions; identity through close
    approaches is resolved by the signature, which is constant between
    events.  A collision is logged when the companion gap drops below
    `collision_radius`.  When the local root disappears, a winding count
    on a small box (axis zeros deflated) decides between a genuine split
    into an off-axis pair - then followed by circle polishing of the
    right-half representative - and an unresolved straddling pair, which
    is tracked through its centroid.  The pair's return to the axis
    (|Re| < `rejoin_tol`) is logged as a rejoin, and the branch resumes
    along the member with its expected signature.  Sign changes of
    Im(lam) are logged as zero crossings and flip the expected signature.

    The mu step divides by `fine_factor` within `fine_window` of any
    event; collisions or splits first detected on a coarse step are
    re-approached at the fine step before being logged.  On quiet
    stretches the signature is measured from the eigenfunction every
    `signature_every` records and carried forward in between.
    """
    mu_grid = np.asarray(mu_grid, dtype=float)
    if mu_grid.ndim != 1 or mu_grid.size < 2:
        raise ValueError("mu_grid must contain at least two points")
    if abs(mu_grid[0] - seed.mu) > 1e-9:
        raise ValueError("mu_grid must start at the seed's mu")
    if m is None:
        m = int(round(seed.mu)) - 1
    pb = profiles if profiles is not None else ProfileBranch(m)
    h = float(mu_grid[1] - mu_grid[0])
    mu_max = float(mu_grid[-1])

    track = BranchTrack(m=int(m), j=int(j), seed=seed, records=[seed])
    expected = seed.signature if seed.signature in (
        SIG_POSITIVE, SIG_NEGATIVE) else None
    on_axis = True
    beta = seed.beta
    lam_off = 0j
    hist_axis: list[tuple[float, float]] = [(seed.mu, beta)]
    hist_off: list[tuple[float, complex]] = []
    partner: float | None = None
    partner_prev: tuple[float, float] | None = None
    prev_gap: float | None = None
    alert = False
    collided = False
    first = True
    since_monitor = 0
    sig_countdown = 0
    mu_cur = float(seed.mu)
    fine_until = -np.inf

    def mark(kind, mu_e, lam_e, psig=None, detail=""):
        track.events.append(TrackEvent(kind, float(mu_e), complex(lam_e),
                                       psig, detail))

    def flip(s):
        return SIG_NEGATIVE if s == SIG_POSITIVE else SIG_POSITIVE

    while mu_cur < mu_max - 1e-9:
        in_fine = mu_cur < fine_until
        h_eff = h / fine_factor if in_fine else h
        mu_new = min(mu_cur + h_eff, mu_max)
        prof = pb.at(mu_new)
        ev = ev_mod.make_evaluator(prof, j)

        if on_axis:
            if len(hist_axis) >= 2:
                (mu_a, b_a), (mu_b, b_b) = hist_axis[-2], hist_axis[-1]
                slope = (b_b - b_a) / (mu_b - mu_a)
            else:
                slope = 0.0
            pred = beta + slope * (mu_new - mu_cur)
            move = abs(pred - beta)

            root = None
            roots: list[float] = []
            scanned = False
            scan_cadence = 3 if alert else monitor_every
            if not (first or since_monitor + 1 >= scan_cadence):
                root = _quick_root(ev, pred, max(0.02, 3.0 * move))
                since_monitor += 1
            if root is None:
                half_w = max(0.3, 6.0 * move, 6.0 * collision_radius)
                roots = _local_axis_zeros(ev, pred, half_w,
                                          n=61 if alert else 31)
                scanned = True
                since_monitor = 0
                if roots:
                    root = min(roots, key=lambda x: abs(x - pred))

            # companion: re-acquire from a scan, or continue the known
            # one through its own bracket
            if scanned:
                others = [x for x in roots if x != root]
                partner = min(others, key=lambda x: abs(x - root)) \
                    if others and root is not None else None
                partner_prev = None
            elif partner is not None:
                if partner_prev is not None:
                    pslope = (partner - partner_prev[1]) / \
                        max(mu_cur - partner_prev[0], 1e-12)
                else:
                    pslope = 0.0
                p_pred = partner + pslope * (mu_new - mu_cur)
                p_new = _quick_root(ev, p_pred,
                                    max(0.02, 3.0 * abs(p_pred - partner)))
                if p_new is not None and abs(p_new - root) > 1e-9:
                    partner_prev = (mu_cur, partner)
                    partner = p_new
                else:
                    # companion bracket failed: recover with a full scan
                    half_w = max(0.3, 6.0 * move, 6.0 * collision_radius)
                    roots = _local_axis_zeros(ev, pred, half_w, n=61)
                    scanned = True
                    since_monitor = 0
                    root = min(roots, key=lambda x: abs(x - pred)) \
                        if roots else None
                    others = [x for x in roots if x != root]
                    partner = min(others, key=lambda x: abs(x - root)) \
                        if others and root is not None else None
                    partner_prev = None

            if root is not None:
                gap = abs(partner - root) if partner is not None else np.inf
                # identity at the first step (seeds can be degenerate)
                # and through close approaches is fixed by the signature
                sig = None
                if (first and len(roots) > 1) or (
                        gap < 3.0 * collision_radius and scanned):
                    cand = [root] + [x for x in roots if x != root and
                                     abs(x - root) < 0.45]
                    sigs = {x: signature_at(prof, j, 1j * x) for x in cand}
                    matching = [x for x, s in sigs.items()
                                if s == expected] if expected else []
                    if matching:
                        new_root = min(matching,
                                       key=lambda x: abs(x - pred))
                        if new_root != root:
                            root = new_root
                            others = [x for x in roots if x != root]
                            partner = min(
                                others, key=lambda x: abs(x - root)
                            ) if others else None
                            partner_prev = None
                            gap = abs(partner - root) \
                                if partner is not None else np.inf
                    sig = sigs.get(root)
                    if expected is None and sig in (SIG_POSITIVE,
                                                    SIG_NEGATIVE):
                        expected = sig

                step_events = []
                new_collided = collided
                if gap < collision_radius and not collided:
                    if first:
                        # degenerate seeds start merged; arm the
                        # hysteresis without logging a collision
                        new_collided = True
                    else:
                        psig = signature_at(prof, j, 1j * partner)
                        step_events.append((
                            "collision", mu_new, 1j * root, psig,
                            f"companion at {partner:.6g}i",
                        ))
                        new_collided = True
                elif gap > 2.0 * collision_radius:
                    new_collided = False
                crossing = beta != 0.0 and root != 0.0 and \
                    (beta < 0.0) != (root < 0.0)
                if crossing:
                    mu_x = mu_cur + (mu_new - mu_cur) * beta / (beta - root)
                    step_events.append((
                        "zero-crossing", mu_x, 0j, None,
                        f"{expected or 'unlabelled'} branch through 0",
                    ))

                if any(e[0] == "collision" for e in step_events) \
                        and not in_fine:
                    fine_until = mu_new + fine_window
                    continue

                for e in step_events:
                    mark(*e)
                collided = new_collided
                if crossing and expected is not None:
                    expected = flip(expected)
                alert = gap < 0.3
                approaching = prev_gap is not None and \
                    np.isfinite(gap) and gap < prev_gap - 1e-12
                if gap < 3.0 * collision_radius and approaching:
                    fine_until = max(fine_until, mu_new + fine_window)
                prev_gap = gap if np.isfinite(gap) else None
                if sig is None:
                    if sig_countdown <= 0 or abs(root) < 0.25 or \
                            step_events:
                        sig = signature_at(prof, j, 1j * root)
                        sig_countdown = signature_every
                    else:
                        sig = expected or SIG_INDEFINITE
                sig_countdown -= 1
                first = False
                beta = root
                hist_axis.append((mu_new, beta))
                track.records.append(EigRecord(1j * beta, j, mu_new, 1,
                                               sig))
                mu_cur = mu_new
                continue

            # no axis root near the prediction: straddling pair or split
            known = tuple(x for x in _local_axis_zeros(
                ev, pred, 3.0 * box_half, n=31) if abs(x - pred) > box_half)
            z = _pair_from_box(ev, pred, box_half, known)
            if z is None:
                z = _pair_from_box(ev, pred, 2.0 * box_half, known)
            if z is None:
                track.lost = True
                mark("track-lost", mu_cur, 1j * beta, None,
                     "no axis root and no local pair")
                break
            if z.real < 2.0 * rejoin_tol:
                # pair straddling the axis below bracket resolution:
                # follow the centroid until the members separate
                first = False
                alert = True
                partner = None
                partner_prev = None
                prev_gap = None
                beta = z.imag
                hist_axis.append((mu_new, beta))
                track.records.append(EigRecord(1j * beta, j, mu_new, 1,
                                               SIG_INDEFINITE))
                fine_until = max(fine_until, mu_new + fine_window)
                mu_cur = mu_new
                continue
            if not in_fine:
                fine_until = mu_new + fine_window
                continue
            if not collided:
                mark("collision", mu_cur, 1j * pred, None,
                     "inferred at split")
            mark("split", mu_new, z)
            first = False
            collided = False
            partner = None
            partner_prev = None
            prev_gap = None
            on_axis = False
            lam_off = z
            hist_off = [(mu_new, z)]
            track.records.append(EigRecord(z, j, mu_new, 1, SIG_OFF_AXIS))
            fine_until = max(fine_until, mu_new + fine_window)
            mu_cur = mu_new
            continue

        # --- off the axis -----------------------------------------------------
        if len(hist_off) >= 2:
            (mu_a, z_a), (mu_b, z_b) = hist_off[-2], hist_off[-1]
            z_pred = lam_off + (z_b - z_a) / (mu_b - mu_a) * (mu_new - mu_cur)
        else:
            z_pred = lam_off
        if z_pred.real < 0.5 * rejoin_tol:
            z_pred = complex(0.5 * rejoin_tol, z_pred.imag)
        known = tuple(_local_axis_zeros(ev, z_pred.imag, 3.0 * box_half,
                                        n=21)) \
            if z_pred.real < 0.12 else ()
        dev = ev_mod._deflate_axis(ev, known)
        r0 = min(max(4.0 * abs(z_pred - lam_off), 4e-3), 0.08)
        z_new: complex | None
        try:
            z_new = ev_mod._polish_zero(dev, z_pred, r0, 1e-7)
        except (ev_mod._MultipleZerosInCircle,
                ev_mod.WindingUnresolvedError,
                ev_mod.RefinementFailedError):
            z_new = _pair_from_box(ev, z_pred.imag, box_half, known)
        if z_new is None:
            track.lost = True
            mark("track-lost", mu_cur, lam_off, None,
                 "off-axis pair could not be re-polished")
            break
        if z_new.real < 0.0:
            z_new = -z_new.conjugate()
        if z_new.real < rejoin_tol:
            if not in_fine:
                fine_until = mu_new + fine_window
                continue
            mark("rejoin", mu_new, z_new)
            on_axis = True
            collided = True
            alert = True
            first = False
            partner = None
            partner_prev = None
            prev_gap = None
            roots = _local_axis_zeros(ev, z_new.imag, 2.0 * box_half, n=61)
            sig = SIG_INDEFINITE
            picked = z_new.imag
            if roots:
                sigs = {x: signature_at(prof, j, 1j * x) for x in roots}
                matching = [x for x, s in sigs.items() if s == expected]
                pool = matching or roots
                picked = min(pool, key=lambda x: abs(x - z_new.imag))
                sig = sigs.get(picked, SIG_INDEFINITE)
                others = [x for x in roots if x != picked]
                partner = min(others, key=lambda x: abs(x - picked)) \
                    if others else None
            beta = float(picked)
            hist_axis = [(mu_new, beta)]
            track.records.append(EigRecord(1j * beta, j, mu_new, 1, sig))
            fine_until = max(fine_until, mu_new + fine_window)
            mu_cur = mu_new
            continue
        if z_new.real < 0.04 and z_new.real < lam_off.real:
            fine_until = max(fine_until, mu_new + fine_window)
        lam_off = z_new
        hist_off.append((mu_new, z_new))
        track.records.append(EigRecord(z_new, j, mu_new, 1, SIG_OFF_AXIS))
        mu_cur = mu_new

    return track


# --- completeness certificate -------------------------------------------------


@dataclass
class CertificateReport:
    """Outcome of the completeness cross-check for one vortex charge."""

    m: int
    mu_range: tuple[float, float]
    passed: bool
    checks: list[str]
    failures: list[str]
    instability_intervals: dict[int, list[tuple[float, float]]]

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "mu_range": [self.mu_range[0], self.mu_range[1]],
            "status": "PASS" if self.passed else "FAIL",
            "checks": list(self.checks),
            "failures": list(self.failures),
            "instability_intervals": {
                str(j): [[a, b] for a, b in iv]
                for j, iv in sorted(self.instability_intervals.items())
            },
        }


def _track_consistency(track: BranchTrack, failures: list, checks: list):
    """Event bookkeeping invariants of a single track."""
    tag = f"m={track.m} j={track.j} seed {track.seed.lam.imag:g}i"
    if track.lost:
        failures.append(f"{tag}: track lost")
        return
    # splits and rejoins alternate, and every split follows a collision
    depth = 0
    last_collision_mu = -np.inf
    for e in track.events:
        if e.kind == "collision":
            last_collision_mu = e.mu
        elif e.kind == "split":
            if depth != 0:
                failures.append(f"{tag}: split while already off-axis "
                                f"at mu={e.mu:.4f}")
            if e.mu - last_collision_mu > 0.5 + 1e-9:
                failures.append(f"{tag}: split at mu={e.mu:.4f} without "
                                "a preceding collision")
            depth += 1
        elif e.kind == "rejoin":
            if depth != 1:
                failures.append(f"{tag}: rejoin without an open split "
                                f"at mu={e.mu:.4f}")
            depth = max(depth - 1, 0)
    # signatures only change at logged zero crossings or excursions
    crossings = [e.mu for e in track.events if e.kind == "zero-crossing"]
    boundary = [e.mu for e in track.events
                if e.kind in ("split", "rejoin", "collision")]
    prev = None
    for rec in track.records:
        s = rec.signature
        if s in (SIG_INDEFINITE, SIG_AT_ORIGIN):
            continue
        if s == SIG_OFF_AXIS:
            prev = None
            continue
        if prev is not None and s != prev[1]:
            lo, hi = prev[0], rec.mu
            near = any(lo - 1e-9 <= x <= hi + 1e-9
                       for x in crossings + boundary)
            if not near:
                failures.append(
                    f"{tag}: signature changed {prev[1]} -> {s} in "
                    f"({lo:.4f}, {hi:.4f}) with no logged event"
                )
        prev = (rec.mu, s)
    # collision parity: the partner must carry the opposite signature
    for e in track.events:
        if e.kind == "collision" and e.partner_signature in (
                SIG_POSITIVE, SIG_NEGATIVE):
            here = None
            for r in track.records:
                if r.mu <= e.mu + 1e-9 and r.signature in (SIG_POSITIVE,
                                                           SIG_NEGATIVE):
                    here = r.signature
            if here is not None and e.partner_signature == here:
                failures.append(
                    f"{tag}: collision at mu={e.mu:.4f} between "
                    f"same-signature eigenvalues ({here})"
                )
    checks.append(f"{tag}: events and signatures consistent "
                  f"({len(track.records)} records, "
                  f"{len(track.events)} events)")


def completeness_certificate(
    m: int,
    mu_range: tuple[float, float],
    tracks: list[BranchTrack] | None = None,
    *,
    profiles: ProfileBranch | None = None,
    step: float = DEFAULT_TRACK_STEP,
    spot_spacing: float = 6.0,
    y_bound: float = DEFAULT_Y_BOUND,
    signature_every: int = 1,
    position_tol: float = 5e-3,
    track_kwargs: dict | None = None,
) -> CertificateReport:
    """Certify that the negative-branch tracks account for every
    instability of modes 0 < j < 2m over the mu window.

    Per-track bookkeeping (events, signature constancy, collision
    parity) is checked first; then the Evans winding is recounted
    independently at stratified spot values of mu plus the midpoint of
    every recorded excursion.  The winding surplus over the axis
    multiplicity must equal twice the number of tracked off-axis pairs
    at each spot, with matching positions where nonzero; the contour is
    widened automatically when a tracked pair approaches the default
    window boundary."""
    lo, hi = float(mu_range[0]), float(mu_range[1])
    mu0 = float(m + 1)
    start = max(lo, mu0)
    pb = profiles if profiles is not None else ProfileBranch(m)
    if tracks is None:
        grid = default_mu_grid(m, hi, step)
        kw = dict(track_kwargs or {})
        kw.setdefault("signature_every", signature_every)
        tracks = [
            track_branch(rec.j, rec, grid, m=m, profiles=pb, **kw)
            for rec in negative_seeds(m)
        ]
    failures: list[str] = []
    checks: list[str] = []
    seeds_needed = {(rec.j, round(rec.beta, 9)) for rec in negative_seeds(m)}
    seeds_have = {(t.j, round(t.seed.beta, 9)) for t in tracks}
    missing = seeds_needed - seeds_have
    if missing:
        failures.append(f"missing tracks for negative seeds: "
                        f"{sorted(missing)}")
    for t in tracks:
        _track_consistency(t, failures, checks)

    intervals: dict[int, list[tuple[float, float]]] = {}
    for t in tracks:
        for a, b in t.off_axis_intervals():
            intervals.setdefault(t.j, []).append((a, b))
    for j in intervals:
        intervals[j].sort()

    # independent recount at stratified spots plus excursion midpoints
    base_spots = list(np.arange(start + 0.5 * spot_spacing, hi,
                                spot_spacing))
    for j in range(1, 2 * m):
        tr_j = [t for t in tracks if t.j == j]
        spots = base_spots + [0.5 * (a + b)
                              for a, b in intervals.get(j, [])]
        for mu_s in sorted(set(round(s, 9) for s in spots)):
            if not (start - 1e-9 <= mu_s <= hi + 1e-9):
                continue
            off = [t.off_axis_at(mu_s) for t in tr_j]
            off = [r for r in off if r is not None]
            y_here = max([y_bound] + [abs(r.lam.imag) + 2.0 for r in off])
            prof = pb.at(mu_s)
            try:
                rep = ev_mod.scan_mode(prof, j, y_bound=y_here)
            except (ev_mod.InconsistentCountError,
                    ev_mod.WindingUnresolvedError,
                    ev_mod.RefinementFailedError) as exc:
                failures.append(f"j={j} mu={mu_s:g}: recount failed "
                                f"({exc})")
                continue
            if rep.n_su != 2 * len(off):
                failures.append(
                    f"j={j} mu={mu_s:g}: winding surplus {rep.n_su} vs "
                    f"{2 * len(off)} tracked off-axis"
                )
                continue
            ok = True
            for r in off:
                tol_here = max(20.0 * position_tol, 0.25 * abs(r.lam.real))
                if not any(abs(z - r.lam) < tol_here
                           for z in rep.unstable):
                    failures.append(
                        f"j={j} mu={mu_s:g}: tracked pair at "
                        f"{complex(r.lam):.5g} not found by the recount"
                    )
                    ok = False
            if ok:
                checks.append(f"j={j} mu={mu_s:g}: recount agrees "
                              f"(n_su={rep.n_su})")

    return CertificateReport(
        m=int(m),
        mu_range=(lo, hi),
        passed=not failures,
        checks=checks,
        failures=failures,
        instability_intervals=intervals,
    )


# --- tail fits ----------------------------------------------------------------


@dataclass(frozen=True)
class TailFit:
    """Algebraic-approach fit Im(lam)(mu) = b - c * mu**(-p)."""

    b: float
    c: float
    p: float
    residual: float
    anomalous: bool
    constant: bool
    window: tuple[float, float]
    n_points: int


def fit_tail(track: BranchTrack, mu_min: float | None = None) -> TailFit:
    """Fit the on-axis tail of a branch to b - c * mu**(-p).

    The limit b comes from iterated-difference (Aitken) extrapolation on
    geometrically spaced tail samples; c and p then come from linear
    least squares of log|Im(lam) - b| against log mu.  Visible curvature
    of that line marks the rate as anomalous (not a clean power law);
    branches pinned by an exact symmetry are flagged constant."""
    data = [(r.mu, r.lam.imag) for r in track.records
            if r.signature != SIG_OFF_AXIS]
    if not data:
        raise ValueError("track has no on-axis samples")
    mus = np.array([d[0] for d in data])
    ys = np.array([d[1] for d in data])
    order = np.argsort(mus)
    mus, ys = mus[order], ys[order]
    mu_max = float(mus[-1])
    if mu_max < 30.0 - 1e-9:
        raise ValueError("tail fit requires the track to reach mu >= 30")
    if mu_min is None:
        mu_min = max(10.0, 0.35 * mu_max)
    sel = mus >= mu_min - 1e-12
    mw, yw = mus[sel], ys[sel]
    if mw.size < 10:
        raise ValueError("tail fit window holds too few on-axis samples")
    gaps = np.diff(mw)
    if np.max(gaps) > 5.0 * np.median(gaps) + 1e-9:
        raise ValueError("branch leaves the axis inside the fit window")

    if np.max(np.abs(yw - yw[-1])) < 1e-8:
        return TailFit(b=float(yw[-1]), c=0.0, p=0.0, residual=0.0,
                       anomalous=False, constant=True,
                       window=(float(mw[0]), mu_max), n_points=int(mw.size))

    q = (mu_max / float(mw[0])) ** (1.0 / 3.0)
    b_estimates = []
    for base in (1.0, 0.95, 0.90):
        m0 = base * mu_max
        pts = [m0, m0 / q, m0 / (q * q)]
        yv = np.interp(pts, mw, yw)
        d1, d2 = yv[1] - yv[0], yv[2] - yv[1]
        if abs(d2 - d1) > 1e-14:
            b_estimates.append(yv[0] - d1 * d1 / (d2 - d1))
    b = float(np.median(b_estimates)) if b_estimates else float(yw[-1])
    # keep the limit strictly outside the sampled range so log|y - b|
    # stays finite across the window
    margin = 1e-10 * max(1.0, abs(b))
    if yw[-1] > yw[0]:
        b = max(b, float(np.max(yw)) + margin)
    else:
        b = min(b, float(np.min(yw)) - margin)

    lx = np.log(mw)
    ly = np.log(np.abs(yw - b))
    A = np.vstack([np.ones_like(lx), -lx]).T
    (logc, p), *_ = np.linalg.lstsq(A, ly, rcond=None)
    fitted = A @ np.array([logc, p])
    residual = float(np.sqrt(np.mean((ly - fitted) ** 2)))
    quad = np.polyfit(lx, ly, 2)
    anomalous = abs(float(quad[0])) > 0.1 or residual > 0.1
    return TailFit(
        b=float(b),
        c=float(np.exp(logc)),
        p=float(p),
        residual=residual,
        anomalous=anomalous,
        constant=False,
        window=(float(mw[0]), mu_max),
        n_points=int(mw.size),
    )
