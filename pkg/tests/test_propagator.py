import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from kinpath import CausticError, DimensionMismatch, InvalidParameters, OverflowSignal, oracles
from kinpath import normal_modes as nm
from kinpath import propagator as prop


def test_free_limit():
    T, x1, x2 = 0.7, 0.3, -0.4
    ref = cmath.sqrt(1 / (2j * math.pi * T)) * cmath.exp(1j * (x2 - x1) ** 2 / (2 * T))
    assert prop.oscillator_kernel(0.0, T, x1, x2) == pytest.approx(ref, rel=1e-14)
    assert prop.oscillator_kernel(1e-10, T, x1, x2) == pytest.approx(ref, rel=1e-12)


def test_quarter_period_amplitude():
    assert abs(prop.oscillator_kernel(1.0, math.pi / 2, 0.0, 0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi),
                                                                                  rel=1e-14)


def test_imaginary_time_origin_value():
    val = prop.oscillator_kernel(1.0, 1.0, 0.0, 0.0, regime="imaginary")
    assert val == pytest.approx(1 / math.sqrt(2 * math.pi * math.sinh(1.0)), rel=1e-15)
    assert val == pytest.approx(0.3680052, abs=1e-7)


@pytest.mark.parametrize("tau", [0.5, 1.0, 3.0, 5.0])
def test_mehler_sum_single_mode(tau):
    # single mode, n_max = 80, unit frequency, wT in [0.5, 5]
    basis = nm.generalized_modes(nm.QuadraticSystem(np.eye(1), np.eye(1)))
    for a, b in ((0.0, 0.0), (0.7, -0.3), (1.5, 1.2)):
        ref = prop.oscillator_kernel(1.0, tau, a, b, regime="imaginary")
        s = prop.spectral_kernel(basis, prop.SpectralTruncation(80), [a], [b], tau)
        assert s.real == pytest.approx(ref, rel=1e-10)


def test_caustic():
    with pytest.raises(CausticError):
        prop.oscillator_kernel(2.0, math.pi / 2, 0.1, 0.2)
    with pytest.raises(OverflowSignal):
        prop.oscillator_kernel(2.0, 351.0, 0.1, 0.2, regime="imaginary")
    with pytest.raises(InvalidParameters):
        prop.oscillator_kernel(1.0, -1.0, 0.0, 0.0)


def test_maslov_phase_continuity():
    # across w T = pi, |K| blows up but the phase steps by exactly -pi/2
    w, eps = 1.0, 1e-6
    before = prop.oscillator_kernel(w, math.pi - eps, 0.0, 0.0)
    after = prop.oscillator_kernel(w, math.pi + eps, 0.0, 0.0)
    step = cmath.phase(after / before)
    assert step == pytest.approx(-math.pi / 2, abs=1e-9)


def test_real_time_matches_analytic_continuation():
    # K(T) at T = -i tau continued through small angles: check the Gaussian exponent
    w, T = 1.3, 0.4
    a, b = 0.2, -0.5
    k = prop.oscillator_kernel(w, T, a, b)
    expo = 1j * w / (2 * math.sin(w * T)) * ((a * a + b * b) * math.cos(w * T) - 2 * a * b)
    pref = cmath.sqrt(w / (2j * math.pi * math.sin(w * T)))
    assert k == pytest.approx(pref * cmath.exp(expo), rel=1e-14)


def test_inverted_mode_is_continuation():
    # w2 < 0 in imaginary time is the oscillating case: compare against w -> i|w|
    sys_ = nm.QuadraticSystem(np.eye(1), -np.eye(1) * 0.25)
    basis = nm.generalized_modes(sys_)
    tau, a, b = 1.0, 0.3, 0.1
    s, c = math.sin(0.5 * tau) / 0.5, math.cos(0.5 * tau)
    ref = math.sqrt(1 / (2 * math.pi * s)) * math.exp(-((a * a + b * b) * c - 2 * a * b) / (2 * s))
    assert prop.coupled_amplitude(basis, [a], [b], tau, regime="imaginary") == pytest.approx(ref, rel=1e-14)


def test_kernel_symmetry(pendulum, rng):
    for _ in range(10):
        p1, p2 = rng.normal(size=2), rng.normal(size=2)
        for regime, T in (("real", 0.8), ("imaginary", 1.3)):
            k12 = prop.coupled_kernel(pendulum, p1, p2, T, regime=regime).amplitude
            k21 = prop.coupled_kernel(pendulum, p2, p1, T, regime=regime).amplitude
            assert k12 == pytest.approx(k21, rel=1e-13)


def test_coupled_kernel_dimension_check(pendulum):
    with pytest.raises(DimensionMismatch):
        prop.coupled_kernel(pendulum, [0.0], [0.0, 0.0], 1.0)


def test_short_time_mass(pendulum):
    # imaginary time: int K(phi, phi'; tau) dphi -> 1 as tau -> 0
    grid = oracles.Grid2D((-1.5, -1.5), (1.5, 1.5), (301, 301))
    pts = grid.points()
    for tau in (0.01, 0.02):
        k = prop.coupled_amplitude(pendulum, np.array([0.2, -0.1]), pts, tau, regime="imaginary")
        mass = np.sum(k) * grid.cell
        assert mass == pytest.approx(1.0, abs=5 * tau)


def test_short_time_envelope(pendulum):
    p1, p2 = np.array([0.0, 0.0]), np.array([0.1, 0.05])
    amps = [abs(prop.coupled_kernel(pendulum, p1, p2, T).amplitude) for T in (1e-3, 4e-3)]
    assert amps[0] / amps[1] == pytest.approx(4.0, rel=1e-2)


def test_real_time_free_normalization():
    # |K|^2 of the free particle is 1/(2 pi hbar T) everywhere; the small-T
    # oscillator must agree to 1e-3
    w, T = 1.0, 0.05
    x = np.linspace(-1.0, 1.0, 11)
    k = prop.oscillator_kernel(w, T, 0.2, x)
    np.testing.assert_allclose(np.abs(k) ** 2 * 2 * math.pi * T, 1.0, rtol=1e-3)


def test_free_action():
    basis = nm.generalized_modes(nm.QuadraticSystem(nm.pendulum_matrices(3, 1, 1, 1).A, np.zeros((2, 2))))
    p1, p2, T = np.array([0.1, 0.3]), np.array([-0.2, 0.4]), 0.9
    d = nm.to_normal(basis, p2) - nm.to_normal(basis, p1)
    assert prop.classical_action(basis, p1, p2, T) == pytest.approx(np.sum(d * d) / (2 * T), rel=1e-14)


def test_action_vanishes_at_short_time(pendulum):
    p = np.array([0.3, -0.2])
    assert abs(prop.classical_action(pendulum, p, p, 1e-9)) < 1e-8


def test_action_equals_integrated_lagrangian(pendulum):
    p1, p2, T = np.array([0.2, -0.1]), np.array([-0.3, 0.25]), 1.1
    xi1, xi2 = nm.to_normal(pendulum, p1), nm.to_normal(pendulum, p2)
    w = np.sqrt(pendulum.omega2)
    # initial normal velocities hitting xi2 at T
    v0 = (xi2 - xi1 * np.cos(w * T)) * w / np.sin(w * T)

    def rhs(t, y):
        n = w.size
        xi, v = y[:n], y[n:2 * n]
        acc = -w * w * xi
        phi = nm.from_normal(pendulum, xi)
        phid = nm.from_normal(pendulum, v)
        return np.concatenate([v, acc, [nm.lagrangian(pendulum.system, phi, phid)]])

    sol = solve_ivp(rhs, (0, T), np.concatenate([xi1, v0, [0.0]]), method="DOP853", rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(sol.y[:2, -1], xi2, atol=1e-9)
    assert prop.classical_action(pendulum, p1, p2, T) == pytest.approx(sol.y[-1, -1], rel=1e-8)


def test_mvh_free():
    basis = nm.generalized_modes(nm.QuadraticSystem(np.eye(1), np.zeros((1, 1))))
    assert prop.mvh_determinant(basis, 0.37) == pytest.approx(1 / 0.37, rel=1e-14)


def test_mvh_finite_difference(pendulum):
    T, h = 0.3, 1e-4
    p0 = np.array([0.1, -0.2])

    def S(a, b):
        return prop.classical_action(pendulum, a, b, T)

    H = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            ei, ej = np.eye(2)[i] * h, np.eye(2)[j] * h
            H[i, j] = (S(p0 + ej, p0 + ei) - S(p0 - ej, p0 + ei) - S(p0 + ej, p0 - ei) + S(p0 - ej, p0 - ei)) / (4 * h * h)
    # H[i, j] = d^2 S / d phi''_i d phi'_j
    assert np.linalg.det(-H) == pytest.approx(prop.mvh_determinant(pendulum, T), rel=1e-6)


def test_prefactor_identity(pendulum):
    for T, regime in ((0.3, "real"), (1.7, "real"), (0.8, "imaginary")):
        amp = abs(prop.coupled_kernel(pendulum, [0, 0], [0, 0], T, regime=regime).amplitude)
        mvh = prop.mvh_determinant(pendulum, T, regime)
        assert amp == pytest.approx((2 * math.pi) ** -1 * math.sqrt(abs(mvh)), rel=1e-12)


def test_kernel_is_prefactor_times_action_phase(pendulum):
    p1, p2, T = np.array([0.2, 0.1]), np.array([-0.1, 0.3]), 0.6
    amp = prop.coupled_kernel(pendulum, p1, p2, T).amplitude
    S = prop.classical_action(pendulum, p1, p2, T)
    pref = cmath.sqrt(prop.mvh_determinant(pendulum, T)) / (2j * math.pi)
    assert amp == pytest.approx(pref * cmath.exp(1j * S), rel=1e-12)


def test_energy_levels(pendulum):
    w = np.sqrt(pendulum.omega2)
    assert prop.energy_level(pendulum, (0, 0)) == pytest.approx(0.5 * w.sum(), rel=1e-15)
    assert prop.energy_level(pendulum, (3, 1), hbar=2.0) - prop.energy_level(pendulum, (2, 1), hbar=2.0) \
        == pytest.approx(2.0 * w[0], rel=1e-13)
    with pytest.raises(InvalidParameters):
        prop.energy_level(pendulum, (-1, 0))


def test_ground_state_projection(pendulum):
    # -d/dtau log K(0, 0; tau) -> E_00 at large tau
    tau = 8.0 / float(np.sqrt(pendulum.omega2.min()))
    h = 1e-3
    lk = lambda t: math.log(prop.coupled_kernel(pendulum, [0, 0], [0, 0], t, regime="imaginary").amplitude.real)  # noqa: E731
    est = -(lk(tau + h) - lk(tau - h)) / (2 * h)
    assert est == pytest.approx(prop.energy_level(pendulum, (0, 0)), rel=1e-2)


def _grid_inner(basis, f, g, grid):
    pts = grid.points()
    return float(np.sum(f(pts) * g(pts)) * grid.cell)


def test_eigenfunction_orthonormal(pendulum):
    grid = oracles.Grid2D((-5, -9), (5, 9), (201, 301))
    psi = lambda q: (lambda pts: prop.eigenfunction(pendulum, q, pts))  # noqa: E731
    assert _grid_inner(pendulum, psi((0, 0)), psi((0, 0)), grid) == pytest.approx(1.0, abs=1e-8)
    assert _grid_inner(pendulum, psi((2, 1)), psi((2, 1)), grid) == pytest.approx(1.0, abs=1e-8)
    assert abs(_grid_inner(pendulum, psi((0, 0)), psi((1, 0)), grid)) < 1e-8
    assert abs(_grid_inner(pendulum, psi((0, 0)), psi((2, 0)), grid)) < 1e-8
    assert abs(_grid_inner(pendulum, psi((1, 1)), psi((0, 1)), grid)) < 1e-8


def test_eigenfunction_cap(pendulum):
    prop.eigenfunction(pendulum, (60, 0), [0.1, 0.1])
    with pytest.raises(OverflowSignal):
        prop.eigenfunction(pendulum, (61, 0), [0.1, 0.1])


def test_spectral_ground_state_dominance(pendulum):
    p1, p2 = np.array([0.2, -0.1]), np.array([-0.1, 0.3])
    tau = 40.0
    s = prop.spectral_kernel(pendulum, prop.SpectralTruncation(0), p1, p2, tau).real
    ref = prop.coupled_kernel(pendulum, p1, p2, tau, regime="imaginary").amplitude.real
    assert s / ref == pytest.approx(1.0, rel=1e-8)
    psi0 = prop.eigenfunction(pendulum, (0, 0), p1) * prop.eigenfunction(pendulum, (0, 0), p2)
    assert s == pytest.approx(psi0 * math.exp(-prop.energy_level(pendulum, (0, 0)) * tau), rel=1e-13)


def test_spectral_partial_sums_monotone(pendulum):
    p = np.array([0.3, 0.2])
    sums = [prop.spectral_kernel(pendulum, prop.SpectralTruncation(n), p, p, 0.7).real for n in range(0, 25)]
    assert np.all(np.diff(sums) >= -1e-15)


def test_spectral_basis_invariance(rng):
    # degenerate modes: any eigenbasis gives the same kernel
    A = np.diag([2.0, 2.0])
    sys_ = nm.QuadraticSystem(A, 3.0 * A)
    basis = nm.generalized_modes(sys_)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    rotated = nm.NormalModeBasis(C=Q @ basis.C, C_inv=np.linalg.inv(Q @ basis.C), omega2=basis.omega2,
                                 det_C=basis.det_C, system=sys_)
    p1, p2 = np.array([0.2, 0.5]), np.array([-0.3, 0.1])
    a = prop.coupled_kernel(basis, p1, p2, 0.9, regime="imaginary").amplitude
    b = prop.coupled_kernel(rotated, p1, p2, 0.9, regime="imaginary").amplitude
    assert a == pytest.approx(b, rel=1e-13)
    # a per-mode box is not rotation invariant, so compare converged sums
    sa = prop.spectral_kernel(basis, prop.SpectralTruncation(60), p1, p2, 0.9)
    sb = prop.spectral_kernel(rotated, prop.SpectralTruncation(60), p1, p2, 0.9)
    assert sa == pytest.approx(sb, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_spectral_converges_to_closed_form(tau, a, b, c, d):
    basis = nm.generalized_modes(nm.pendulum_matrices(3, 1, 1, 1))
    ref = prop.coupled_kernel(basis, [a, b], [c, d], tau, regime="imaginary").amplitude.real
    s = prop.spectral_kernel(basis, prop.SpectralTruncation(120), [a, b], [c, d], tau).real
    assert s == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_truncation_validation():
    with pytest.raises(InvalidParameters):
        prop.SpectralTruncation(-1)
    with pytest.raises(InvalidParameters):
        prop.SpectralTruncation(3, regime="complex")
