"""Signature classification, branch tracking, certificates, tail fits."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

import vortex_evans.evans as ve
import vortex_evans.krein as kr


# --- seed tables --------------------------------------------------------------


def test_seed_table_m1_contents():
    tab = [(r.j, r.beta, r.signature) for r in kr.seed_table(1)]
    want = [
        (1, -5.0, "positive"),
        (1, -3.0, "positive"),
        (1, -1.0, "positive"),
        (1, -1.0, "negative"),
        (1, 1.0, "positive"),
        (1, 3.0, "positive"),
        (1, 5.0, "positive"),
        (2, -6.0, "positive"),
        (2, -4.0, "positive"),
        (2, -2.0, "positive"),
        (2, 0.0, "at-origin"),
        (2, 2.0, "positive"),
        (2, 4.0, "positive"),
        (2, 6.0, "positive"),
    ]
    assert sorted(tab) == sorted(want)
    assert all(r.mu == 2.0 and r.multiplicity == 1 for r in kr.seed_table(1))


def test_negative_seed_tables():
    assert [(r.j, r.beta) for r in kr.negative_seeds(1)] == [(1, -1.0)]
    assert [(r.j, r.beta) for r in kr.negative_seeds(2)] == [
        (1, -1.0), (2, -2.0), (3, -1.0)]
    assert [(r.j, r.beta) for r in kr.negative_seeds(3)] == [
        (1, -1.0), (2, -2.0), (3, -3.0), (3, -1.0), (4, -2.0), (5, -1.0)]


def test_seed_table_respects_y_bound():
    tab = kr.seed_table(2, y_bound=3.0)
    assert all(abs(r.beta) <= 3.0 for r in tab)
    assert any(r.beta == -3.0 for r in tab)
    with pytest.raises(ValueError):
        kr.seed_table(5)


def test_modes_beyond_2m_have_no_negative_seeds():
    for m in (1, 2, 3):
        for rec in kr.seed_table(m):
            if rec.j >= 2 * m:
                assert rec.signature in ("positive", "at-origin")


# --- signature convention -----------------------------------------------------


def _eig(y_plus, y_minus, r):
    return SimpleNamespace(r=r, y_plus=y_plus, y_minus=y_minus)


def test_signature_pure_channels_match_linear_limit():
    r = np.linspace(1e-3, 8.0, 1600)
    mode = r * np.exp(-(r ** 2) / 2.0)
    zero = np.zeros_like(r)
    # + channel carries energy (j + 2n) > 0 at beta = -(j + 2n)
    assert kr.signature_of(1, -1j, _eig(mode, zero, r)) == "positive"
    # - channel carries energy with the sign of beta
    assert kr.signature_of(1, -1j, _eig(zero, mode, r)) == "negative"
    assert kr.signature_of(1, +1j, _eig(zero, mode, r)) == "positive"
    assert kr.signature_of(1, +1j, _eig(mode, zero, r)) == "negative"


def test_signature_balanced_is_indefinite_and_origin_special():
    r = np.linspace(1e-3, 8.0, 1600)
    mode = r * np.exp(-(r ** 2) / 2.0)
    assert kr.signature_of(1, 2j, _eig(mode, mode, r)) == "indefinite"
    assert kr.signature_of(1, 0j, _eig(mode, 0 * mode, r)) == "at-origin"
    with pytest.raises(ValueError):
        kr.signature_of(1, 0.5 + 1j, _eig(mode, 0 * mode, r))


def test_signature_weighted_mixture_follows_dominant_channel():
    r = np.linspace(1e-3, 8.0, 1600)
    mode = r * np.exp(-(r ** 2) / 2.0)
    heavy_plus = _eig(2.0 * mode, mode, r)
    assert kr.signature_of(2, -3j, heavy_plus) == "positive"
    assert kr.signature_of(2, 3j, heavy_plus) == "negative"


# --- measured signatures on a real profile ------------------------------------


@pytest.fixture(scope="module")
def branch_m1():
    return kr.ProfileBranch(1)


def test_profile_branch_lands_exactly(branch_m1):
    p = branch_m1.at(2.001)
    assert abs(p.mu - 2.001) < 1e-9
    p2 = branch_m1.at(2.2)
    assert abs(p2.mu - 2.2) < 1e-9
    # cache returns the same object
    assert branch_m1.at(2.2) is p2


def test_split_double_signatures_at_mu_2p2(branch_m1):
    # at the branch endpoint both families place an eigenvalue at -i;
    # just above, the pinned zero stays at exactly -i with positive
    # signature while the negative-signature member moves up the axis
    p = branch_m1.at(2.2)
    ev = ve.make_evaluator(p, 1)
    roots = kr._local_axis_zeros(ev, -0.95, 0.3, n=61)
    assert len(roots) == 2
    pinned = min(roots, key=lambda x: abs(x + 1.0))
    mover = max(roots, key=lambda x: abs(x + 1.0))
    assert abs(pinned + 1.0) < 1e-6
    assert abs(mover + 0.908013) < 2e-4
    assert kr.signature_at(p, 1, 1j * pinned) == "positive"
    assert kr.signature_at(p, 1, 1j * mover) == "negative"


# --- local quadratic pair recovery --------------------------------------------


def _poly_ev(*zeros, scale=1.0, background=0.0):
    zs = tuple(complex(z) for z in zeros)

    def ev(lam):
        v = complex(scale)
        for z in zs:
            v = v * (complex(lam) - z)
        v = v * np.exp(background * complex(lam))
        mag = abs(v)
        if mag == 0.0:
            return 0j, -np.inf
        return v / mag, float(np.log(mag))

    return ev


@pytest.mark.parametrize("x", [0.3, 1e-2, 1e-4, 1e-6])
def test_quadratic_roots_resolve_tiny_separations(x):
    z1 = complex(x, -1.3)
    z2 = complex(-x, -1.3)
    ev = _poly_ev(z1, z2, 2.0j, -3.5j, scale=0.7, background=0.2)
    rr = kr._quadratic_roots(ev, -1.3j, 0.08)
    assert rr is not None
    got = sorted(rr, key=lambda z: z.real)
    assert abs(got[1] - z1) < max(1e-8, 1e-3 * x)
    assert abs(got[0] - z2) < max(1e-8, 1e-3 * x)


def test_pair_from_box_polished_pair():
    z = complex(0.02, -1.0)
    ev = _poly_ev(z, -z.conjugate(), 1.5j, -3.0j, scale=1.3,
                  background=0.1)
    got = kr._pair_from_box(ev, -1.0, 0.1, ())
    assert got is not None
    assert abs(got - z) < 1e-6


def test_pair_from_box_straddling_returns_centroid():
    z = complex(3e-5, -1.0)
    ev = _poly_ev(z, -z.conjugate(), 1.5j, -3.0j)
    got = kr._pair_from_box(ev, -1.0, 0.1, ())
    assert got is not None
    assert 0.0 <= got.real < 1e-4
    assert abs(got.imag + 1.0) < 1e-6


def test_pair_from_box_rejects_wrong_count():
    # only one zero in the box -> winding 1 -> None
    ev = _poly_ev(complex(0.02, -1.0), 1.5j, -3.0j)
    assert kr._pair_from_box(ev, -1.0, 0.1, ()) is None


# --- short real tracking ------------------------------------------------------


@pytest.fixture(scope="module")
def short_tracks(branch_m1):
    grid = kr.default_mu_grid(1, 2.5)
    neg = kr.track_branch(1, kr.negative_seeds(1)[0], grid,
                          m=1, profiles=branch_m1)
    pos_seed = [r for r in kr.seed_table(1)
                if r.j == 1 and r.beta == -1.0
                and r.signature == "positive"][0]
    pos = kr.track_branch(1, pos_seed, grid, m=1, profiles=branch_m1)
    return neg, pos


def test_degenerate_seed_identity_negative_member_moves(short_tracks):
    neg, _ = short_tracks
    assert not neg.lost
    assert neg.events == []
    betas = [r.beta for r in neg.records]
    assert betas[0] == -1.0
    assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(betas, betas[1:]))
    assert betas[-1] > -0.90
    sigs = {r.signature for r in neg.records[1:]}
    assert sigs <= {"negative", "indefinite"}
    assert "negative" in sigs


def test_degenerate_seed_identity_positive_member_pinned(short_tracks):
    _, pos = short_tracks
    assert not pos.lost
    assert pos.events == []
    for rec in pos.records:
        assert abs(rec.beta + 1.0) < 1e-6
        assert abs(rec.lam.real) == 0.0
    sigs = {r.signature for r in pos.records[1:]}
    assert sigs <= {"positive", "indefinite"}
    assert "positive" in sigs


def test_track_rows_carry_mu_j_lambda_signature(short_tracks):
    neg, _ = short_tracks
    rows = neg.rows()
    assert len(rows) == len(neg.records)
    mu, j, re, im, sig, event = rows[0]
    assert (mu, j, re, im) == (2.0, 1, 0.0, -1.0)
    assert sig == "negative"
    assert event == ""
    assert all(r[5] == "" for r in rows)


def test_track_branch_rejects_bad_grid():
    seed = kr.negative_seeds(1)[0]
    with pytest.raises(ValueError):
        kr.track_branch(1, seed, [2.0])
    with pytest.raises(ValueError):
        kr.track_branch(1, seed, [2.5, 3.0])


# --- synthetic track containers ----------------------------------------------


def _mk_track(records, events, m=2, j=2, lost=False):
    seed = records[0]
    return kr.BranchTrack(m=m, j=j, seed=seed, records=list(records),
                          events=list(events), lost=lost)


def _axis_rec(mu, beta, sig, j=2):
    return kr.EigRecord(1j * beta, j, mu, 1, sig)


def _off_rec(mu, z, j=2):
    return kr.EigRecord(z, j, mu, 1, "zero")


def test_off_axis_intervals_and_cycles():
    records = [
        _axis_rec(3.0, -2.0, "negative"),
        _off_rec(3.05, 0.01 - 2.0j),
        _off_rec(4.0, 0.15 - 2.04j),
        _axis_rec(4.6, -2.1, "negative"),
        _axis_rec(4.65, -2.12, "negative"),
        _off_rec(5.0, 0.05 - 2.2j),
        _off_rec(5.2, 0.08 - 2.22j),
    ]
    events = [
        kr.TrackEvent("collision", 3.0, -2j, "positive"),
        kr.TrackEvent("split", 3.05, 0.01 - 2.0j),
        kr.TrackEvent("rejoin", 4.6, 0.0009 - 2.1j),
        kr.TrackEvent("collision", 4.95, -2.19j, "positive"),
        kr.TrackEvent("split", 5.0, 0.05 - 2.2j),
    ]
    tr = _mk_track(records, events)
    assert tr.off_axis_intervals() == [(3.05, 4.0), (5.0, 5.2)]
    assert tr.cycles() == 1
    mid = tr.off_axis_at(3.5)
    assert mid is not None and mid.mu == 4.0
    assert tr.off_axis_at(4.62) is None
    assert tr.off_axis_at(5.1) is not None


def test_rows_attach_events_to_following_record():
    records = [
        _axis_rec(3.0, -2.0, "negative"),
        _off_rec(3.05, 0.01 - 2.0j),
        _off_rec(3.1, 0.02 - 2.0j),
    ]
    events = [
        kr.TrackEvent("collision", 3.02, -2j, "positive"),
        kr.TrackEvent("split", 3.05, 0.01 - 2.0j),
    ]
    rows = _mk_track(records, events).rows()
    assert rows[0][5] == ""
    assert rows[1][5] == "collision+split"
    assert rows[2][5] == ""


def test_consistency_clean_bubble_passes():
    records = [
        _axis_rec(3.0, -2.0, "negative"),
        _off_rec(3.05, 0.01 - 2.0j),
        _axis_rec(4.6, -2.1, "negative"),
    ]
    events = [
        kr.TrackEvent("collision", 3.0, -2j, "positive"),
        kr.TrackEvent("split", 3.05, 0.01 - 2.0j),
        kr.TrackEvent("rejoin", 4.6, 0.0009 - 2.1j),
    ]
    failures, checks = [], []
    kr._track_consistency(_mk_track(records, events), failures, checks)
    assert failures == []
    assert checks


def test_consistency_flags_orphan_excursion():
    records = [
        _axis_rec(3.0, -2.0, "negative"),
        _off_rec(3.05, 0.01 - 2.0j),
        _axis_rec(4.6, -2.1, "negative"),
    ]
    events = [kr.TrackEvent("rejoin", 4.6, 0.0009 - 2.1j)]
    failures, checks = [], []
    kr._track_consistency(_mk_track(records, events), failures, checks)
    assert any("rejoin without an open split" in f for f in failures)


def test_consistency_flags_silent_signature_flip():
    records = [
        _axis_rec(3.0, -1.0, "negative", j=3),
        _axis_rec(3.5, -0.5, "negative", j=3),
        _axis_rec(4.0, 0.5, "positive", j=3),
    ]
    failures, checks = [], []
    kr._track_consistency(_mk_track(records, [], j=3), failures, checks)
    assert any("no logged event" in f for f in failures)
    # with the crossing logged the same history is clean
    ev = [kr.TrackEvent("zero-crossing", 3.75, 0j)]
    failures2, checks2 = [], []
    kr._track_consistency(_mk_track(records, ev, j=3), failures2, checks2)
    assert failures2 == []


def test_consistency_flags_same_signature_collision():
    records = [
        _axis_rec(3.0, -2.0, "negative"),
        _axis_rec(3.5, -2.0, "negative"),
    ]
    events = [kr.TrackEvent("collision", 3.5, -2j, "negative")]
    failures, checks = [], []
    kr._track_consistency(_mk_track(records, events), failures, checks)
    assert any("same-signature" in f for f in failures)


def test_consistency_flags_lost_track():
    records = [_axis_rec(3.0, -2.0, "negative")]
    failures, checks = [], []
    kr._track_consistency(_mk_track(records, [], lost=True),
                          failures, checks)
    assert any("lost" in f for f in failures)


def test_certificate_report_json_shape():
    rep = kr.CertificateReport(
        m=2, mu_range=(3.0, 35.0), passed=False,
        checks=["a"], failures=["b"],
        instability_intervals={2: [(3.05, 4.6)]},
    )
    d = rep.to_json_dict()
    assert d["status"] == "FAIL"
    assert d["instability_intervals"] == {"2": [[3.05, 4.6]]}
    assert d["mu_range"] == [3.0, 35.0]


# --- tail fits ----------------------------------------------------------------


def _fit_track(mu, y, j=1, m=1):
    records = [kr.EigRecord(1j * yy, j, float(mm), 1,
                            "negative") for mm, yy in zip(mu, y)]
    return kr.BranchTrack(m=m, j=j, seed=records[0], records=records)


def test_fit_tail_recovers_pure_power_law():
    b, c, p = -1.41, 1.82, 1.04
    mu = np.arange(3.0, 35.0 + 1e-9, 0.05)
    y = b - c * mu ** (-p)
    fit = kr.fit_tail(_fit_track(mu, y))
    assert not fit.constant
    assert not fit.anomalous
    assert abs(fit.b - b) < 5e-3
    assert abs(fit.p - p) < 2e-2
    assert abs(fit.c - c) < 5e-2
    assert fit.residual < 1e-3


def test_fit_tail_positive_limit_branch():
    b, c, p = 3.16, 2.43, 1.02
    mu = np.arange(3.0, 35.0 + 1e-9, 0.05)
    y = b - c * mu ** (-p)
    fit = kr.fit_tail(_fit_track(mu, y, j=2, m=2))
    assert abs(fit.b - b) < 5e-3
    assert abs(fit.p - p) < 2e-2


def test_fit_tail_constant_branch_flagged():
    mu = np.arange(2.0, 35.0 + 1e-9, 0.05)
    y = np.full_like(mu, -1.0)
    fit = kr.fit_tail(_fit_track(mu, y))
    assert fit.constant
    assert fit.b == -1.0
    assert fit.c == 0.0


def test_fit_tail_flags_non_algebraic_decay():
    mu = np.arange(3.0, 35.0 + 1e-9, 0.05)
    y = 2.0 - 3.0 * np.exp(-mu / 5.0)
    fit = kr.fit_tail(_fit_track(mu, y))
    assert fit.anomalous


def test_fit_tail_requires_reach_and_contiguity():
    mu = np.arange(3.0, 20.0, 0.05)
    y = -1.41 - 1.82 * mu ** (-1.04)
    with pytest.raises(ValueError):
        kr.fit_tail(_fit_track(mu, y))
    # a bubble inside the fit window leaves a gap in the axis samples
    mu2 = np.arange(3.0, 35.0 + 1e-9, 0.05)
    y2 = -1.41 - 1.82 * mu2 ** (-1.04)
    records = []
    for mm, yy in zip(mu2, y2):
        if 20.0 <= mm <= 24.0:
            records.append(kr.EigRecord(0.1 + 1j * yy, 1, float(mm), 1,
                                        "zero"))
        else:
            records.append(kr.EigRecord(1j * yy, 1, float(mm), 1,
                                        "negative"))
    tr = kr.BranchTrack(m=1, j=1, seed=records[0], records=records)
    with pytest.raises(ValueError):
        kr.fit_tail(tr)


def test_default_mu_grid_endpoints():
    g = kr.default_mu_grid(2, 35.0)
    assert g[0] == 3.0
    assert abs(g[-1] - 35.0) < 1e-9
    assert abs(g[1] - g[0] - 0.05) < 1e-12
