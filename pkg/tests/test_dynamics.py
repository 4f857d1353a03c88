import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from deformosc.algebra import DeformationSpec, OscillatorModel, ladder_matrices
from deformosc.bath import constant_bath, thermal_bath
from deformosc.dynamics import (
    RK45,
    IntegratorConfig,
    Trajectory,
    coherence_rhs,
    evolve_density,
    evolve_populations,
    expect_a,
    expect_omega_a,
    mean_N_closed_form,
    mean_N_closed_form_expanded,
    mean_N_rhs,
    rk4_sampled,
)
from deformosc.liouvillian import FullGenerator, build_population_generator
from deformosc.stationary import steady_populations

from conftest import interior_hermitian


def fock(dim, n):
    p = np.zeros(dim)
    p[n] = 1.0
    return p


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(1.0, method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(-1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(1.0, samples=[0.5, 0.2])
    with pytest.raises(ValueError):
        IntegratorConfig(1.0, samples=[0.5, 2.0])
    with pytest.raises(ValueError):
        IntegratorConfig(1.0, dt=0.0)
    np.testing.assert_allclose(IntegratorConfig(2.0, samples=5).sample_times(), [0, 0.5, 1, 1.5, 2])
    assert IntegratorConfig(2.0, samples=1).sample_times().tolist() == [2.0]


def test_rk4_lands_on_samples_and_is_exact_for_cubics():
    # y' = 3t^2 written autonomously as (y, t)' = (3 t^2, 1); RK4 is exact for it
    f = lambda y: np.array([3 * y[1] ** 2, 1.0])
    out = rk4_sampled(f, np.array([0.0, 0.0]), np.array([0.0, 0.37, 1.0]), dt=0.3)
    assert [o[1] for o in out] == pytest.approx([0.0, 0.37, 1.0], abs=1e-15)
    assert out[2][0] == pytest.approx(1.0, abs=1e-14)


def test_rk4_fourth_order():
    m = OscillatorModel(1.0, DeformationSpec.q_deformation(0.1), 10)
    gen = build_population_generator(m, thermal_bath(1.0, 1.0, 1.0))
    p0 = fock(m.dim, 4)
    exact = expm(gen.toarray() * 1.0) @ p0
    errs = []
    for dt in (0.1, 0.05, 0.025):
        traj = evolve_populations(m, thermal_bath(1.0, 1.0, 1.0), p0, IntegratorConfig(1.0, dt=dt, samples=[1.0]), keep_snapshots=True)
        errs.append(np.max(np.abs(traj.snapshots[-1] - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7), orders


def test_rk45_agrees_with_matrix_exponential():
    m = OscillatorModel(1.0, DeformationSpec.identity(), 12)
    bath = thermal_bath(0.5, 0.7, 1.0)
    p0 = fock(m.dim, 3)
    cfg = IntegratorConfig(2.0, method=RK45, rtol=1e-10, atol=1e-13, samples=[0.0, 1.0, 2.0])
    traj = evolve_populations(m, bath, p0, cfg, keep_snapshots=True)
    ref = expm(build_population_generator(m, bath).toarray() * 2.0) @ p0
    np.testing.assert_allclose(traj.snapshots[-1], ref, atol=1e-9)
    assert traj.dt_used is None


def test_population_and_density_evolutions_agree():
    m = OscillatorModel(1.0, DeformationSpec.q_deformation(0.1), 14)
    bath = thermal_bath(0.5, 0.5, 1.0)
    cfg = IntegratorConfig(2.0, samples=5)
    pops = evolve_populations(m, bath, fock(m.dim, 3), cfg, policy="drop")
    dens = evolve_density(m, bath, np.diag(fock(m.dim, 3)).astype(complex), cfg)
    np.testing.assert_allclose(dens.mean_N, pops.mean_N, atol=1e-12)
    np.testing.assert_allclose(dens.trace, pops.trace, atol=1e-12)


def test_reflecting_conserves_trace_and_positivity():
    m = OscillatorModel(1.0, DeformationSpec.q_deformation(0.2), 8)
    traj = evolve_populations(m, thermal_bath(1.0, 3.0, 1.0), fock(m.dim, 8), IntegratorConfig(5.0, samples=11))
    assert np.max(np.abs(traj.trace_leak)) < 1e-12
    assert np.min(traj.min_eig) > -1e-14


def test_l1_distance_to_steady_state_decreases():
    m = OscillatorModel(1.0, DeformationSpec.q_deformation(0.1), 16)
    bath = thermal_bath(1.0, 1.0, 1.0)
    p_ss = steady_populations(m, bath)
    traj = evolve_populations(m, bath, fock(m.dim, 6), IntegratorConfig(10.0, samples=41), keep_snapshots=True)
    dist = np.array([np.abs(s - p_ss).sum() for s in traj.snapshots])
    assert np.all(np.diff(dist) <= 1e-13)
    assert dist[-1] < 1e-3


def test_density_positivity_monitored():
    m = OscillatorModel(1.0, DeformationSpec.q_deformation(0.1), 10)
    rho0 = np.zeros((11, 11), complex)
    rho0[[1, 1, 2, 2], [1, 2, 1, 2]] = 0.5  # pure superposition of |1>, |2>
    traj = evolve_density(m, thermal_bath(0.5, 0.0, 1.0), rho0, IntegratorConfig(3.0, samples=7))
    assert np.all(traj.min_eig > -1e-10)
    assert np.max(np.abs(traj.trace_leak)) < 1e-12
    with pytest.raises(ValueError):
        evolve_density(m, thermal_bath(0.5, 0.0, 1.0), np.eye(3), IntegratorConfig(1.0))


def test_trajectory_rows():
    t = Trajectory(*(np.arange(3.0) for _ in range(6)))
    assert len(list(t.rows())) == 3
    assert Trajectory.COLUMNS[0] == "t"


@settings(max_examples=25, deadline=None)
@given(tau=st.floats(0.0, 0.3), temp=st.floats(0.0, 3.0), seed=st.integers(0, 2**31))
def test_mean_N_law_matches_trace(tau, temp, seed):
    m = OscillatorModel(1.0, DeformationSpec.q_deformation(tau), 10)
    bath = thermal_bath(0.8, temp, 1.0)
    rng = np.random.default_rng(seed)
    rho = interior_hermitian(m.dim, rng)
    lhs = np.real(np.sum(np.arange(m.dim) * np.diagonal(FullGenerator(m, bath)(rho))))
    assert abs(lhs - mean_N_rhs(m, bath, rho)) <= 1e-10


def test_mean_N_law_needs_thermal_bath():
    m = OscillatorModel(1.0, DeformationSpec.identity(), 4)
    with pytest.raises(ValueError):
        mean_N_rhs(m, constant_bath(1.0, 1.0, 1.0, 1.0), np.ones(5))


def test_closed_form_limits():
    assert mean_N_closed_form(3.0, 0.5, 0.0, 1.3) == pytest.approx(3.0 * np.exp(-1.3), rel=1e-15)
    assert mean_N_closed_form(3.0, 0.5, 0.05, 0.0) == 3.0
    t = np.linspace(0, 4, 9)
    diff = mean_N_closed_form(3.0, 0.5, 0.05, t) - mean_N_closed_form_expanded(3.0, 0.5, 0.05, t)
    assert np.max(np.abs(diff)) < 1e-5  # second order in tau^2


@pytest.mark.parametrize("n0,lam,tau", [(3.0, 0.5, 0.05), (5.0, 1.2, 0.2), (1.0, 0.1, 0.01)])
def test_closed_form_solves_mean_field_ode(n0, lam, tau):
    eps = tau * tau / 6.0
    sol = solve_ivp(
        lambda t, x: -2 * lam * (x + eps * (x**3 - x)),
        (0, 4),
        [n0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-15,
        dense_output=True,
    )
    t = np.linspace(0, 4, 41)
    np.testing.assert_allclose(mean_N_closed_form(n0, lam, tau, t), sol.sol(t)[0], rtol=1e-9, atol=0)


@pytest.mark.parametrize("tau", [0.0, 0.15])
def test_coherence_equations_against_generator(tau, rng):
    m = OscillatorModel(1.1, DeformationSpec.q_deformation(tau), 12)
    bath = thermal_bath(0.6, 0.0, 1.1)
    gen = FullGenerator(m, bath)
    a, _, _ = ladder_matrices(OscillatorModel(1.1, DeformationSpec.identity(), 12))
    om = np.diag(m.omega_values())
    for _ in range(5):
        rho = interior_hermitian(m.dim, rng) + 1j * 0.0
        drho = gen(rho)
        da, dom = coherence_rhs(m, bath, rho)
        assert da == pytest.approx(np.trace(drho @ a), abs=1e-12)
        assert dom == pytest.approx(np.trace(drho @ om @ a), abs=1e-12)
        assert expect_a(rho) == pytest.approx(np.trace(rho @ a), abs=1e-14)
        assert expect_omega_a(m, rho) == pytest.approx(np.trace(rho @ om @ a), abs=1e-14)


def test_coherence_equations_finite_difference():
    m = OscillatorModel(1.0, DeformationSpec.q_deformation(0.1), 20)
    bath = thermal_bath(0.4, 0.0, 1.0)
    psi = np.zeros(m.dim, complex)
    psi[1:5] = [0.6, 0.5j, 0.4, 0.3]
    psi /= np.linalg.norm(psi)
    rho0 = np.outer(psi, psi.conj())
    h = 1e-3
    traj = evolve_density(m, bath, rho0, IntegratorConfig(0.5 + h, dt=1e-4, samples=[0.5 - h, 0.5, 0.5 + h]), keep_snapshots=True)
    lo, mid, hi = traj.snapshots
    fd = (expect_a(hi) - expect_a(lo)) / (2 * h)
    da, _ = coherence_rhs(m, bath, mid)
    assert abs(fd - da) < 1e-6 * max(1.0, abs(da))


def test_coherence_requires_zero_temperature():
    m = OscillatorModel(1.0, DeformationSpec.identity(), 4)
    with pytest.raises(ValueError):
        coherence_rhs(m, thermal_bath(1.0, 1.0, 1.0), np.eye(5))
