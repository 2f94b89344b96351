import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from virial_lab import spectral as sp
from virial_lab.potentials import Coulomb, Free, Harmonic, PowerLaw


@pytest.fixture(scope="module")
def harmonic_l0():
    ham = sp.build_hamiltonian(sp.RadialGrid(400, 12.0), sp.NonRelativistic(), Harmonic())
    return sp.solve(ham, 4)


@pytest.fixture(scope="module")
def hydrogen():
    ham = sp.build_hamiltonian(sp.RadialGrid(1000, 60.0), sp.NonRelativistic(), Coulomb(-1.0))
    return sp.solve(ham, 2)


def _oscillator_u(n, ell=0):
    """Unnormalised 3-D oscillator radial function u(r) = r R(r)."""
    return lambda r: r ** (ell + 1) * np.exp(-(r**2) / 2) * scipy.special.eval_genlaguerre(n, ell + 0.5, r**2)


def _quad(f):
    return scipy.integrate.quad(f, 0, np.inf, limit=200)[0]


def test_grid_geometry():
    g = sp.RadialGrid(99, 10.0)
    assert g.h == pytest.approx(0.1)
    assert g.nodes[0] == pytest.approx(0.1)
    assert g.nodes[-1] == pytest.approx(9.9)
    with pytest.raises(ValueError):
        sp.RadialGrid(8, 1.0)


def test_free_box_is_exact():
    sol = sp.solve(sp.build_hamiltonian(sp.RadialGrid(100, 10.0), sp.NonRelativistic(), Free()), 5)
    exact = (np.arange(1, 6) * math.pi / 10.0) ** 2 / 2
    np.testing.assert_allclose(sol.eigenvalues, exact, atol=1e-10)


def test_harmonic_spectrum(harmonic_l0):
    np.testing.assert_allclose(harmonic_l0.eigenvalues, [1.5, 3.5, 5.5, 7.5], atol=1e-6)


@pytest.mark.parametrize("ell", [1, 2])
def test_harmonic_higher_ell(ell):
    ham = sp.build_hamiltonian(sp.RadialGrid(800, 12.0), sp.NonRelativistic(), Harmonic(), ell=ell)
    sol = sp.solve(ham, 3)
    np.testing.assert_allclose(sol.eigenvalues, 2 * np.arange(3) + ell + 1.5, atol=1e-6)
    for n in range(3):
        assert abs(sp.virial_residual(sol, n)) / sol.eigenvalues[n] <= 1e-6


def test_harmonic_equipartition(harmonic_l0):
    assert sp.expectation(harmonic_l0, 0, "T") == pytest.approx(0.75, abs=1e-6)
    assert sp.expectation(harmonic_l0, 0, "V") == pytest.approx(0.75, abs=1e-6)
    assert sp.expectation(harmonic_l0, 0, "p_dT") == pytest.approx(2 * sp.expectation(harmonic_l0, 0, "T"), rel=1e-13)


def test_hydrogen_ground_state(hydrogen):
    assert hydrogen.eigenvalues[0] == pytest.approx(-0.5, abs=1e-4)
    assert sp.expectation(hydrogen, 0, "T") == pytest.approx(0.5, abs=1e-3)
    assert sp.expectation(hydrogen, 0, "V") == pytest.approx(-1.0, abs=1e-3)
    assert abs(sp.virial_residual(hydrogen, 0)) / 0.5 <= 1e-3


def test_hydrogen_refinement_gain():
    errs = []
    for n in (250, 500):
        sol = sp.solve(sp.build_hamiltonian(sp.RadialGrid(n, 60.0), sp.NonRelativistic(), Coulomb(-1.0)), 1)
        errs.append(abs(sol.eigenvalues[0] + 0.5))
    assert errs[0] / errs[1] >= 4


def test_hydrogen_1s_2s_offdiag(hydrogen):
    # p dT/dp - r dV/dr = 2T + V = 2H - V, so <1s|..|2s> = <1s|1/r|2s> = 4 sqrt(2) / 27
    oracle = 4 * math.sqrt(2) / 27
    got = sp.offdiag_virial(hydrogen, 0, 1)
    assert abs(got - oracle) <= 1e-3 * oracle
    assert abs(sp.commutator_route(hydrogen, 0, 1) - oracle) <= 1e-3 * oracle


def test_harmonic_offdiag_against_quadrature(harmonic_l0):
    # 2T - 2V = 2H - 4V, so <0|..|1> = -2 <0|r^2|1> for the oscillator
    u0, u1 = _oscillator_u(0), _oscillator_u(1)
    n0 = math.sqrt(_quad(lambda r: u0(r) ** 2))
    n1 = math.sqrt(_quad(lambda r: u1(r) ** 2))
    oracle = abs(-2 * _quad(lambda r: u0(r) * r**2 * u1(r)) / (n0 * n1))
    assert oracle == pytest.approx(math.sqrt(6), rel=1e-10)
    assert abs(abs(sp.offdiag_virial(harmonic_l0, 0, 1)) - oracle) <= 1e-6 * oracle
    assert abs(sp.offdiag_virial(harmonic_l0, 0, 1) - sp.commutator_route(harmonic_l0, 0, 1)) <= 1e-8 * oracle


def test_offdiag_diagonal_is_virial_residual(harmonic_l0):
    assert sp.offdiag_virial(harmonic_l0, 2, 2) == pytest.approx(sp.virial_residual(harmonic_l0, 2), abs=1e-14)


def test_wavefunction_matches_oscillator(harmonic_l0):
    g = harmonic_l0.grid
    psi = harmonic_l0.wavefunctions()[:, 0]
    u = _oscillator_u(0)(g.nodes)
    u /= math.sqrt(g.h * np.sum(u**2))
    np.testing.assert_allclose(psi, u, atol=1e-8)


def test_orthonormality(harmonic_l0):
    psi = harmonic_l0.wavefunctions()
    np.testing.assert_allclose(harmonic_l0.grid.h * psi.T @ psi, np.eye(4), atol=1e-10)


def test_stationarity(harmonic_l0):
    # plain central differences leave a 4 T dlam^2 = 3e-6 bias at the default step
    assert abs(sp.dilated_energy_derivative(harmonic_l0, 0)) == pytest.approx(3e-6, rel=1e-2)
    assert abs(sp.dilated_energy_derivative(harmonic_l0, 0, richardson=True)) <= 1e-6
    assert abs(sp.dilated_energy_derivative(harmonic_l0, 0, dlam=1e-4)) <= 1e-6


def test_trial_state_dilation_oracle():
    # u = r exp(-a r^2 / 2) in the oscillator: E(lam) = 3a/(4 lam^2) + 3 lam^2/(4a)
    a = 1.1**2
    oracle = 1.5 * (1 / a - a)
    assert oracle == pytest.approx(-0.5753305785, abs=1e-9)
    g = sp.RadialGrid(200, 12.0)
    ham = sp.build_hamiltonian(g, sp.NonRelativistic(), Harmonic())
    r = g.nodes
    c = sp.coefficients_from_grid(g, 1.1 * r * np.exp(-((1.1 * r) ** 2) / 2))
    got = sp.dilated_energy_derivative_of(ham, c)
    assert got == pytest.approx(oracle, abs=1e-5)
    # the identity holds for non-eigenstates too
    virial = float(c @ (ham.p_dt_matrix - ham.r_dv_matrix) @ c)
    assert got == pytest.approx(-virial, abs=1e-5)


def test_free_dilation_is_pure_kinetic_scaling():
    ham = sp.build_hamiltonian(sp.RadialGrid(64, 5.0), sp.NonRelativistic(), Free())
    sol = sp.solve(ham, 2)
    t = sp.expectation(sol, 1, "T")
    assert sp.dilated_energy_derivative(sol, 1, richardson=True) == pytest.approx(-2 * t, rel=1e-10)


def test_salpeter_virial_and_dilation():
    ham = sp.build_hamiltonian(sp.RadialGrid(400, 12.0), sp.Salpeter(1.0, 1.0), Harmonic())
    sol = sp.solve(ham, 2)
    for n in range(2):
        e = sol.eigenvalues[n]
        assert abs(sp.virial_residual(sol, n)) <= 1e-3 * abs(e)
        assert sp.dilated_energy_derivative(sol, n) == pytest.approx(-sp.virial_residual(sol, n), abs=1e-4 * abs(e))


def test_salpeter_nonrelativistic_limit():
    ham = sp.build_hamiltonian(sp.RadialGrid(400, 12.0), sp.Salpeter(1.0, 200.0), Harmonic())
    assert sp.solve(ham, 1).eigenvalues[0] == pytest.approx(1.5, rel=1e-4)


def test_salpeter_higher_ell_virial():
    ham = sp.build_hamiltonian(sp.RadialGrid(300, 12.0), sp.Salpeter(1.0, 1.0), Harmonic(), ell=1)
    sol = sp.solve(ham, 1)
    assert abs(sp.virial_residual(sol, 0)) <= 1e-3 * sol.eigenvalues[0]


@settings(max_examples=10, deadline=None)
@given(lam=st.sampled_from([2.0, 4.0]), strength=st.floats(0.5, 2.0))
def test_power_law_virial(lam, strength):
    ham = sp.build_hamiltonian(sp.RadialGrid(300, 10.0), sp.NonRelativistic(), PowerLaw(strength, lam))
    sol = sp.solve(ham, 2)
    for n in range(2):
        t, v = sp.expectation(sol, n, "T"), sp.expectation(sol, n, "V")
        assert abs(2 * t - lam * v) <= 1e-6 * sol.eigenvalues[n]


def test_collocation_option():
    ham = sp.build_hamiltonian(sp.RadialGrid(400, 12.0), sp.NonRelativistic(), Harmonic(), method="collocation")
    np.testing.assert_allclose(sp.solve(ham, 3).eigenvalues, [1.5, 3.5, 5.5], atol=1e-6)
    with pytest.raises(ValueError):
        sp.build_hamiltonian(sp.RadialGrid(16, 1.0), sp.NonRelativistic(), Free(), method="spline")


def test_hamiltonian_is_symmetric():
    ham = sp.build_hamiltonian(sp.RadialGrid(80, 10.0), sp.Salpeter(1.0, 1.0), Coulomb(-0.5), ell=1)
    assert np.array_equal(ham.matrix, ham.matrix.T)


def test_grid_too_coarse():
    # Bohr radius 1e-3 on a grid with spacing 3.5
    with pytest.raises(sp.GridTooCoarse):
        sp.build_hamiltonian(sp.RadialGrid(16, 60.0), sp.NonRelativistic(), Coulomb(-1000.0))
    sp.build_hamiltonian(sp.RadialGrid(16, 60.0), sp.NonRelativistic(), Coulomb(-1.0))


def test_unknown_observable(harmonic_l0):
    with pytest.raises(sp.UnknownObservable):
        sp.expectation(harmonic_l0, 0, "L2")


def test_identity_matrix_solve():
    sol = sp.solve(np.eye(20), 5)
    np.testing.assert_array_equal(sol.eigenvalues, np.ones(5))
    np.testing.assert_allclose(sol.coefficients.T @ sol.coefficients, np.eye(5), atol=1e-12)


def test_solve_bounds():
    with pytest.raises(ValueError):
        sp.solve(np.eye(4), 0)
    with pytest.raises(ValueError):
        sp.solve(np.eye(4), 5)


def test_solve_is_deterministic():
    ham = sp.build_hamiltonian(sp.RadialGrid(64, 8.0), sp.NonRelativistic(), Harmonic())
    a, b = sp.solve(ham, 3), sp.solve(ham, 3)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert np.all(a.wavefunctions()[np.argmax(np.abs(a.wavefunctions()) > 1e-6, axis=0), range(3)] > 0)


def test_dlam_bounds(harmonic_l0):
    with pytest.raises(ValueError):
        sp.dilated_energy_derivative(harmonic_l0, 0, dlam=0.1)


def test_state_report_keys(harmonic_l0):
    rep = sp.state_report(harmonic_l0, 0)
    assert set(rep) >= {"E", "T", "V", "p_dT", "r_dV", "residual", "dilation_derivative"}
