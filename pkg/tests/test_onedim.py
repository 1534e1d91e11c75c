import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate

from debond import (
    ConstantProfile,
    FrontTrajectory,
    InverseSquareProfile,
    PiecewiseLinear,
    build_spiky_drive,
    check_eb_ell,
    check_gs_ell,
    constant_kappa_front,
    front_field,
    linear_drive,
)
from debond.errors import DriveError, UnsupportedDriveClass
from debond.onedim import envelope_power_integral, flat_landscape_front

K = ConstantProfile(0.5)


def test_front_field_examples():
    assert np.allclose(front_field(1.0, 0.3, np.linspace(0, 1, 5), L=1.0), 0.3)
    assert front_field(0.5, 1.0, 0.25) == pytest.approx(0.5)
    assert front_field(0.5, 1.0, 0.75) == 0.0
    assert np.all(front_field(0.0, 1.0, np.linspace(0, 1, 5)) == 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0))
def test_gs_matches_closed_form(ell, t):
    bound = math.sqrt(2 * 0.5 * ell * min(ell, 1 - ell))
    assume(abs(t - bound) > 1e-6)
    assert check_gs_ell(ell, t, K, 1.0).passed == (t <= bound)


def test_gs_trivial_for_zero_drive():
    for ell in (0.05, 0.5, 0.9):
        assert check_gs_ell(ell, 0.0, K, 1.0).passed


def test_gs_flat_landscape():
    w = 0.3
    k = InverseSquareProfile(w * w / 2, cap=0.5)
    for ell in (0.1, 0.25, 0.45):
        rep = check_gs_ell(ell, w, k, 1.0)
        assert rep.passed
        assert abs(rep.worst_margin) <= 1e-12
        # margins are exactly zero up to the cap and positive beyond
        e = 0.5 * w * w / ell
        for rho in np.linspace(ell, 0.5, 7)[1:]:
            assert 0.5 * w * w / rho + k.integral(ell, rho) - e == pytest.approx(0.0, abs=1e-14)
        for rho in (0.6, 0.8):
            assert 0.5 * w * w / rho + k.integral(ell, rho) - e > 0


def test_example_one_trajectory():
    tr = constant_kappa_front(linear_drive(0.8), 0.5, 0.1, 1.0)
    for t, ell in [(0.0, 0.1), (0.05, 0.1), (0.1, 0.1), (0.3, 0.3), (0.4999, 0.4999), (0.5, 1.0), (0.8, 1.0)]:
        assert tr.front(t) == pytest.approx(ell, abs=1e-12)
    assert [j[0] for j in tr.jumps] == [pytest.approx(0.5)]
    eb = check_eb_ell(tr, np.linspace(0, 0.8, 161))
    assert np.max(np.abs(eb.residual)) <= 1e-12
    # values at t = 0.4 from the closed form
    k = list(eb.times).index(pytest.approx(0.4))
    assert eb.elastic[k] == pytest.approx(0.2)
    assert eb.dissipated[k] == pytest.approx(0.15)
    assert eb.work[k] == pytest.approx(0.35)


def test_example_two_jump():
    tr = constant_kappa_front(linear_drive(0.8), 0.5, 0.6, 1.0)
    (tj, before, after), = tr.jumps
    assert tj == pytest.approx(math.sqrt(0.24), abs=1e-14)
    assert (before, after) == (0.6, 1.0)
    eb = check_eb_ell(tr, np.linspace(0, 0.8, 161))
    assert np.max(np.abs(eb.residual)) <= 1e-12
    k = list(eb.times).index(tj)
    # dissipated jump 0.2 equals the elastic drop 0.24 / 1.2
    assert eb.dissipated[k] == pytest.approx(0.2)
    assert eb.elastic[k] == 0.0
    assert tj**2 / (2 * 0.6) == pytest.approx(0.2)


def test_jumps_are_residual_free():
    for ell0 in (0.1, 0.3, 0.5, 0.7):
        tr = constant_kappa_front(linear_drive(1.0), 0.5, ell0, 1.0)
        for t, _, _ in tr.jumps:
            eb = check_eb_ell(tr, [t - 1e-9, t])
            assert np.max(np.abs(eb.residual)) <= 1e-12


def test_spurious_jump_breaks_balance():
    w, ell, delta, kappa = 0.3, 0.35, 0.1, 0.5
    d = PiecewiseLinear(np.array([0.0, 1.0]), np.array([w, w]))
    tr = FrontTrajectory([0.0, 0.5, 1.0], [ell, ell + delta], [0.0, 0.0], d, ConstantProfile(kappa), ell, 1.0)
    eb = check_eb_ell(tr, [0.25, 0.75])
    expected = kappa * delta + w * w / (2 * (ell + delta)) - w * w / (2 * ell)
    assert eb.residual[list(eb.times).index(0.25)] == pytest.approx(0.0, abs=1e-15)
    assert eb.residual[list(eb.times).index(0.75)] == pytest.approx(expected, rel=1e-12)
    assert abs(expected) > 1e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.4), st.floats(0.0, 2.0), st.floats(0.0, 0.3), st.floats(0.1, 1.0))
def test_work_quadrature_against_scipy(a, b, w0, beta):
    # front a + b t and drive w0 + beta t on [0, 1]
    d = PiecewiseLinear(np.array([0.0, 1.0]), np.array([w0, w0 + beta]))
    tr = FrontTrajectory([0.0, 1.0], [a], [b], d, K, a, 10.0)
    eb = check_eb_ell(tr, [1.0])
    ref, _ = integrate.quad(lambda t: beta * (w0 + beta * t) / (a + b * t), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    assert eb.work[-1] == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_unsupported_drives():
    with pytest.raises(UnsupportedDriveClass):
        constant_kappa_front(PiecewiseLinear(np.array([0.0, 1.0]), np.array([0.5, 0.6])), 0.5, 0.1, 1.0)
    with pytest.raises(UnsupportedDriveClass):
        constant_kappa_front(PiecewiseLinear(np.array([0.0, 1.0]), np.array([0.0, -0.1])), 0.5, 0.1, 1.0)
    with pytest.raises(UnsupportedDriveClass):
        flat_landscape_front(linear_drive(1.0), 0.045, 0.5, 0.1, 1.0)


drive_values = st.lists(st.floats(0.0, 0.45), min_size=2, max_size=12)


@settings(max_examples=60, deadline=None)
@given(drive_values, st.floats(0.0, 0.45))
def test_envelope_rule_trajectories(values, ell0):
    values[0] = min(values[0], ell0)  # stable start
    d = PiecewiseLinear(np.linspace(0.0, 1.0, len(values)), np.array(values))
    tr = constant_kappa_front(d, 0.5, ell0, 1.0)
    ts = np.linspace(0, 1, 201)
    fronts = tr.sample(ts)
    assert fronts[0] == pytest.approx(ell0)
    assert np.all(np.diff(fronts) >= -1e-15)
    fine = np.union1d(ts, d.times)
    env = np.interp(ts, fine, np.maximum.accumulate(d(fine)))
    assert np.allclose(fronts, np.maximum(ell0, env), atol=1e-12)
    for t, f in zip(ts[::10], fronts[::10]):
        w = float(d(t))
        if f == 0:
            assert w == 0
        else:
            assert check_gs_ell(f, w, K, 1.0).passed
    eb = check_eb_ell(tr, ts)
    assert np.max(np.abs(eb.residual)) <= 1e-12 * max(1.0, np.max(eb.elastic))


@settings(max_examples=60, deadline=None)
@given(drive_values)
def test_envelope_is_smallest_monotone_majorant(values):
    d = PiecewiseLinear(np.linspace(0.0, 1.0, len(values)), np.array(values))
    env = d.envelope()
    ts = np.linspace(0, 1, 4001)
    e = env(ts)
    assert np.all(np.diff(e) >= -1e-15)
    assert np.all(e >= d(ts) - 1e-15)
    # brute force running max on a fine grid that contains every sample time
    fine = np.union1d(ts, d.times)
    brute = np.interp(ts, fine, np.maximum.accumulate(d(fine)))
    assert np.allclose(e, brute, atol=1e-12)


def test_single_tent():
    d = build_spiky_drive([1.0], [0.5])
    assert list(d.times) == [0.0, 0.5, 1.0]
    assert list(d.values) == [0.0, 0.5, 0.0]
    env = d.envelope()
    assert env(0.75) == 0.5 and env(1.0) == 0.5


def test_spiky_drive_shape_and_lower_bound():
    J = 12
    T = 1.0
    times = [T * 2.0 ** (1 - j) for j in range(1, J + 1)]
    peaks = [1.0 / j**2 for j in range(1, J + 1)]
    d = build_spiky_drive(times, peaks)
    assert d.T == T
    assert np.sum(np.abs(np.diff(d.values))) == pytest.approx(2 * sum(peaks))
    integrals = []
    for n in range(1, J + 1):
        dn = build_spiky_drive(times[:n] if n == J else times[: n + 1], peaks[:n])
        integrals.append(envelope_power_integral(dn))
        assert integrals[-1] >= 2 * sum(math.sqrt(a) for a in peaks[:n]) - 1e-12
    assert all(b > a for a, b in zip(integrals, integrals[1:]))


def test_spiky_front_balances():
    d = build_spiky_drive([1.0, 0.5, 0.25, 0.125], [1.0, 0.25, 1 / 9, 1 / 16])
    tr = constant_kappa_front(d, 0.5, 0.0, 10.0)
    ts = np.linspace(0, 1, 401)
    env = d.envelope()
    assert np.allclose(tr.sample(ts), env(ts), atol=1e-14)
    assert np.max(np.abs(check_eb_ell(tr, ts).residual)) <= 1e-12


def test_spiky_drive_rejects_bad_input():
    with pytest.raises(DriveError):
        build_spiky_drive([0.5, 1.0], [1.0, 0.5])
    with pytest.raises(DriveError):
        build_spiky_drive([1.0, 0.5], [0.25, 1.0])
