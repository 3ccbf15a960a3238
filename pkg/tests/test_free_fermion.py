import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ed_correlations, sector_ground_vector
from spinlab import ed_oracle as ed
from spinlab.chain_model import ChainSpec, QuadraticForm, build_quadratic_form, dispersion, momentum_grid
from spinlab.errors import NotApplicableError, NumericalInconsistencyError
from spinlab.free_fermion import (
    correlations,
    ground_energy_check,
    ground_state_correlations,
    sector_ground_energy,
    solve,
)


def car_errors(sol):
    g, h = sol.g, sol.h
    n = sol.n_modes
    return np.abs(g @ g.T + h @ h.T - np.eye(n)).max(), np.abs(g @ h.T + h @ g.T).max()


def spec_strategy():
    return st.builds(
        lambda model, n, lam, gamma, bc, par: ChainSpec(
            model, n, lam, gamma, bc, par if bc == "periodic" else None
        ),
        st.sampled_from(["ising", "xy"]),
        st.integers(2, 16),
        st.sampled_from([0.0, 0.3, 1.0, 1.7]) | st.floats(-2.5, 2.5),
        st.floats(-1.5, 1.5),
        st.sampled_from(["open", "periodic"]),
        st.sampled_from(["even", "odd"]),
    )


@given(spec=spec_strategy())
@settings(max_examples=150, deadline=None)
def test_solution_invariants(spec):
    qf = build_quadratic_form(spec)
    sol = solve(qf)
    n = spec.n_sites
    assert np.all(np.diff(sol.lambdas) >= 0) and sol.lambdas[0] >= 0
    np.testing.assert_allclose(sol.Phi @ sol.Phi.T, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(sol.Psi @ sol.Psi.T, np.eye(n), atol=1e-10)
    gg, gh = car_errors(sol)
    assert gg < 1e-10 and gh < 1e-10
    lam = sol.lambdas[:, None]
    np.testing.assert_allclose(((qf.A - qf.B) @ sol.Psi.T).T, lam * sol.Phi, atol=1e-9)
    np.testing.assert_allclose(((qf.A + qf.B) @ sol.Phi.T).T, lam * sol.Psi, atol=1e-9)
    corr = correlations(sol)
    np.testing.assert_allclose(corr.C, corr.C.T, atol=1e-12)
    np.testing.assert_allclose(corr.F, -corr.F.T, atol=1e-12)
    w = np.linalg.eigvalsh(corr.C)
    assert w.min() > -1e-10 and w.max() < 1 + 1e-10


def test_two_site_g_h_closed_form():
    for lam in (0.2, 0.7, 1.0, 2.5):
        a = np.sqrt(1 + 4 * lam**2)
        s = 1 / np.sqrt(8 * a)
        g = s * np.array([
            [(2 * lam + a - 1) / np.sqrt(a - 1), (2 * lam + a - 1) / np.sqrt(a - 1)],
            [(-2 * lam - a - 1) / np.sqrt(a + 1), (2 * lam + a + 1) / np.sqrt(a + 1)],
        ])
        h = s * np.array([
            [(2 * lam - a + 1) / np.sqrt(a - 1), (a - 1 - 2 * lam) / np.sqrt(a - 1)],
            [(-2 * lam + a + 1) / np.sqrt(a + 1), (a + 1 - 2 * lam) / np.sqrt(a + 1)],
        ])
        sol = solve(build_quadratic_form(ChainSpec("ising", 2, lam)))
        for k in range(2):
            # modes are defined up to a common sign of (g_k, h_k)
            sign = np.sign(sol.g[k] @ g[k])
            np.testing.assert_allclose(sign * sol.g[k], g[k], atol=1e-10)
            np.testing.assert_allclose(sign * sol.h[k], h[k], atol=1e-10)
        # (A-B)^T (A-B) has trace 8 lam^2 + 4 and determinant 16 lam^4, eigenvalues (a -/+ 1)^2
        np.testing.assert_allclose(sol.lambdas, [a - 1, a + 1], atol=1e-10)


def test_two_site_correlation_closed_form():
    for lam in (0.0, 0.4, 1.0, 3.0):
        a = np.sqrt(1 + 4 * lam**2)
        _, corr = ground_state_correlations(ChainSpec("ising", 2, lam))
        assert corr.C[0, 0] == pytest.approx(0.5 - lam / a, abs=1e-12)


def test_strong_field_empties_the_chain():
    _, corr = ground_state_correlations(ChainSpec("ising", 6, 1e6))
    assert np.abs(corr.C).max() < 1e-6


def test_periodic_lambdas_match_dispersion():
    for lam in (0.3, 1.0, 1.7):
        spec = ChainSpec("ising", 8, lam, boundary="periodic", parity="even")
        closed = np.sort(dispersion(spec, momentum_grid(spec).phis))
        np.testing.assert_allclose(solve(build_quadratic_form(spec)).lambdas, closed, atol=1e-10)


def test_zero_field_degenerate_spectrum():
    for bc in ("open", "periodic"):
        sol = solve(build_quadratic_form(ChainSpec("ising", 6, 0.0, boundary=bc)))
        if bc == "periodic":
            np.testing.assert_allclose(sol.lambdas, 2.0, atol=1e-12)
        else:
            np.testing.assert_allclose(sol.lambdas[1:], 2.0, atol=1e-12)
            assert sol.lambdas[0] < 1e-12  # free end spin
        gg, gh = car_errors(sol)
        assert gg < 1e-10 and gh < 1e-10


def test_squared_route_agrees_off_edge_modes():
    qf = build_quadratic_form(ChainSpec("ising", 10, 1.4, boundary="periodic"))
    a, b = solve(qf), solve(qf, method="squared")
    np.testing.assert_allclose(a.lambdas, b.lambdas, atol=1e-10)
    assert a.ground_energy == pytest.approx(b.ground_energy, abs=1e-10)
    with pytest.raises(ValueError):
        solve(qf, method="bogus")


def test_squared_route_rejects_broken_input():
    # for valid input (A+B)(A-B) = (A-B)^T (A-B) >= 0; a non-symmetric A breaks that
    A = np.array([[1.0, 2.0], [-2.0, 1.0]])
    with pytest.raises(NumericalInconsistencyError):
        solve(QuadraticForm(A, np.zeros((2, 2)), 0.0), method="squared")


@pytest.mark.parametrize("model,gamma", [("ising", 1.0), ("xy", 0.5)])
@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 1.7])
@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_sector_energies_match_ed(model, gamma, lam, n):
    spec = ChainSpec(model, n, lam, gamma, "periodic")
    H = ed.build_spin_hamiltonian(spec)
    sec = ground_energy_check(spec)
    even, _ = sector_ground_vector(H, 1)
    odd, _ = sector_ground_vector(H, -1)
    assert sec.even == pytest.approx(even, abs=1e-9)
    assert sec.odd == pytest.approx(odd, abs=1e-9)
    e_ed, _ = ed.ground_state(H)
    assert sec.ground == pytest.approx(e_ed, abs=1e-9)


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 1.7])
def test_open_energy_matches_ed(lam):
    for model, gamma in (("ising", 1.0), ("xy", 0.5), ("xy", 0.0)):
        spec = ChainSpec(model, 7, lam, gamma)
        e_ed, _ = ed.ground_state(ed.build_spin_hamiltonian(spec))
        assert sector_ground_energy(spec) == pytest.approx(e_ed, abs=1e-9)


def test_even_sector_lowest_and_gap_closes():
    sec = ground_energy_check(ChainSpec("ising", 8, 0.5, boundary="periodic"))
    assert sec.even <= sec.odd and sec.lower.value == "even"
    gaps = [ground_energy_check(ChainSpec("ising", n, 0.5, boundary="periodic")).gap for n in (8, 12, 16)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_even_sector_strong_field_against_ed():
    spec = ChainSpec("ising", 8, 2.0, boundary="periodic")
    e_ed, _ = ed.ground_state(ed.build_spin_hamiltonian(spec))
    assert ground_energy_check(spec).even == pytest.approx(e_ed, abs=1e-9)


@pytest.mark.parametrize("bc", ["open", "periodic"])
@pytest.mark.parametrize("model,gamma,lam", [("ising", 1, 0.5), ("ising", 1, 1.5), ("xy", 0.6, 0.3), ("xy", 0.6, 1.2)])
def test_correlations_match_ed(bc, model, gamma, lam):
    n = 6
    spec = ChainSpec(model, n, lam, gamma, bc)
    _, corr = ground_state_correlations(spec)
    H = ed.build_spin_hamiltonian(spec)
    if bc == "periodic":
        _, psi = sector_ground_vector(H, 1)
    else:
        _, psi = ed.ground_state(H)
    C, F = ed_correlations(psi, n)
    np.testing.assert_allclose(corr.C, C, atol=1e-10)
    np.testing.assert_allclose(corr.F, F, atol=1e-10)


def test_wrong_parity_vacuum_is_rejected():
    # odd sector at strong field: the vacuum is even, so it is not a spin-chain state
    with pytest.raises(NotApplicableError):
        ground_state_correlations(ChainSpec("ising", 6, 2.0, boundary="periodic", parity="odd"))


def test_ground_energy_check_needs_periodic():
    with pytest.raises(NotApplicableError):
        ground_energy_check(ChainSpec("ising", 4, 0.5))
