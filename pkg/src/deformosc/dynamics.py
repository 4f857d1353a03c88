"""Time evolution, observables and the analytic moment laws.

Fixed-step RK4 is the default integrator. Steps are shortened where
needed so every requested sample time is hit exactly. Adaptive RK45
goes through scipy's ``solve_ivp`` with dense output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .algebra import OscillatorModel
from .bath import BathModel, coth
from .liouvillian import REFLECTING, FullGenerator, build_population_generator

RK4 = "rk4"
RK45 = "rk45"


class IntegrationError(RuntimeError):
    pass


@dataclass
class IntegratorConfig:
    t_final: float
    method: str = RK4
    dt: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    samples: Sequence[float] | int = 11

    def __post_init__(self):
        if self.method not in (RK4, RK45):
            raise ValueError(f"unknown integrator {self.method!r}")
        if not (np.isfinite(self.t_final) and self.t_final >= 0):
            raise ValueError("t_final must be >= 0")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        times = self.sample_times()
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if times[0] < 0 or times[-1] > self.t_final:
            raise ValueError("sample times must lie in [0, t_final]")

    def sample_times(self) -> np.ndarray:
        if isinstance(self.samples, (int, np.integer)):
            if self.samples < 1:
                raise ValueError("need at least one sample")
            if self.samples == 1:
                return np.array([float(self.t_final)])
            return np.linspace(0.0, self.t_final, int(self.samples))
        return np.asarray(self.samples, dtype=float)


@dataclass
class Trajectory:
    times: np.ndarray
    mean_N: np.ndarray
    energy: np.ndarray
    trace: np.ndarray
    trace_leak: np.ndarray
    min_eig: np.ndarray
    snapshots: list[np.ndarray] | None = field(default=None, repr=False)
    dt_used: float | None = None

    COLUMNS = ("t", "mean_N", "energy", "trace", "trace_leak", "min_eig")

    def rows(self):
        return zip(self.times, self.mean_N, self.energy, self.trace, self.trace_leak, self.min_eig)


def rk4_sampled(f: Callable, y0: np.ndarray, times: np.ndarray, dt: float):
    """Classical RK4 from t=0, landing exactly on each entry of ``times``.

    Each gap between samples is split into ceil(gap/dt) equal steps.
    """
    y = np.array(y0, copy=True)
    t = 0.0
    out = []
    for target in times:
        gap = target - t
        if gap > 0:
            nsteps = max(1, math.ceil(gap / dt - 1e-12))
            h = gap / nsteps
            for _ in range(nsteps):
                k1 = f(y)
                k2 = f(y + 0.5 * h * k1)
                k3 = f(y + 0.5 * h * k2)
                k4 = f(y + h * k3)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = target
        out.append(y.copy())
    return out


def _adaptive(f: Callable, y0: np.ndarray, times: np.ndarray, cfg: IntegratorConfig):
    if cfg.t_final == 0:
        return [np.array(y0, copy=True) for _ in times]
    sol = solve_ivp(
        lambda t, y: f(y),
        (0.0, cfg.t_final),
        y0,
        method="RK45",
        t_eval=times,
        rtol=cfg.rtol,
        atol=cfg.atol,
    )
    if sol.status != 0:
        raise IntegrationError(f"adaptive integration failed: {sol.message}")
    return [sol.y[:, i] for i in range(sol.y.shape[1])]


def _gershgorin_bound(mat) -> float:
    return float(np.max(np.abs(mat).sum(axis=0)))


def suggest_dt(rate_bound: float, cap: float = 0.01) -> float:
    """RK4 step comfortably inside the stability region (|h z| <= 0.5)."""
    if rate_bound <= 0:
        return cap
    return min(cap, 0.5 / rate_bound)


def _integrate(f, y0, cfg: IntegratorConfig, rate_bound: float):
    times = cfg.sample_times()
    if cfg.method == RK45:
        return times, _adaptive(f, y0, times, cfg), None
    dt = cfg.dt if cfg.dt is not None else suggest_dt(rate_bound)
    return times, rk4_sampled(f, y0, times, dt), dt


def mean_N(state: np.ndarray) -> float:
    """<N> for a population vector or a density matrix."""
    state = np.asarray(state)
    p = np.real(np.diagonal(state)) if state.ndim == 2 else np.asarray(state, dtype=float)
    return float(np.dot(np.arange(len(p)), p))


def energy(model: OscillatorModel, state: np.ndarray) -> float:
    state = np.asarray(state)
    p = np.real(np.diagonal(state)) if state.ndim == 2 else np.asarray(state, dtype=float)
    return float(np.dot(model.energies(), p))


def evolve_density(
    model: OscillatorModel,
    bath: BathModel,
    rho0: np.ndarray,
    cfg: IntegratorConfig,
    keep_snapshots: bool = False,
) -> Trajectory:
    """Integrate the full master equation (drop truncation).

    Records trace, trace leak 1 - tr(rho) and the smallest eigenvalue of
    the Hermitian part at each sample; positivity is monitored, not enforced.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = model.dim
    if rho0.shape != (d, d):
        raise ValueError(f"initial state has shape {rho0.shape}, expected {(d, d)}")
    gen = FullGenerator(model, bath)

    def rhs(y):
        return gen(y.reshape(d, d)).ravel()

    bound = float(np.max(np.abs(gen.diag))) + sum(float(np.max(np.abs(c))) for c in gen.bands.values())
    times, states, dt = _integrate(rhs, rho0.ravel(), cfg, bound)
    mats = [s.reshape(d, d) for s in states]
    tr = np.array([np.trace(r).real for r in mats])
    min_eig = np.array([np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0] for r in mats])
    return Trajectory(
        times=times,
        mean_N=np.array([mean_N(r) for r in mats]),
        energy=np.array([energy(model, r) for r in mats]),
        trace=tr,
        trace_leak=1.0 - tr,
        min_eig=min_eig,
        snapshots=mats if keep_snapshots else None,
        dt_used=dt,
    )


def evolve_populations(
    model: OscillatorModel,
    bath: BathModel,
    p0: np.ndarray,
    cfg: IntegratorConfig,
    policy: str = REFLECTING,
    keep_snapshots: bool = False,
) -> Trajectory:
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (model.dim,):
        raise ValueError(f"initial populations have shape {p0.shape}, expected {(model.dim,)}")
    gen = build_population_generator(model, bath, policy)
    mat = gen.matrix
    times, states, dt = _integrate(lambda y: mat @ y, p0, cfg, _gershgorin_bound(gen.toarray()))
    tr = np.array([s.sum() for s in states])
    return Trajectory(
        times=times,
        mean_N=np.array([mean_N(s) for s in states]),
        energy=np.array([energy(model, s) for s in states]),
        trace=tr,
        trace_leak=1.0 - tr,
        min_eig=np.array([s.min() for s in states]),
        snapshots=[s.copy() for s in states] if keep_snapshots else None,
        dt_used=dt,
    )


def _thermal_factor(bath: BathModel, omega_vals: np.ndarray) -> np.ndarray:
    if bath.temperature == 0:
        return np.ones_like(omega_vals)
    with np.errstate(over="ignore"):
        y = bath.omega * omega_vals / (2.0 * bath.temperature)
    return np.asarray(coth(y))


def mean_N_rhs(model: OscillatorModel, bath: BathModel, state: np.ndarray) -> float:
    """d<N>/dt = lambda <(coth(w Om(N)/2T) - 1) phi(N+1)> - lambda <(coth(w Om(N-1)/2T) + 1) phi(N)>."""
    if not bath.is_thermal:
        raise ValueError("the <N> law is only available for thermal baths")
    state = np.asarray(state)
    p = np.real(np.diagonal(state)) if state.ndim == 2 else np.asarray(state, dtype=float)
    ph = model.phi_values()
    cth = _thermal_factor(bath, model.omega_values())
    d = model.dim
    up = (cth - 1.0) * ph[1 : d + 1]
    down = np.zeros(d)
    down[1:] = (cth[:-1] + 1.0) * ph[1:d]
    return float(bath.lam * np.dot(up - down, p))


def mean_N_closed_form(n0: float, lam: float, tau: float, t):
    """Small-deformation solution of d<N>/dt = -2 lambda <[N]> at T = 0.

    Uses [N] ~ N + (tau^2/6)(N^3 - N) and <N^3> ~ <N>^3.
    """
    t = np.asarray(t, dtype=float)
    eps = tau * tau / 6.0
    rate = 1.0 - eps
    decay = np.exp(-2.0 * lam * rate * t)
    out = n0 * math.sqrt(rate) * decay / np.sqrt(rate + eps * n0 * n0 * (1.0 - decay * decay))
    return float(out) if out.ndim == 0 else out


def mean_N_closed_form_expanded(n0: float, lam: float, tau: float, t):
    """First-order expansion of :func:`mean_N_closed_form` in tau^2 (diagnostic only)."""
    t = np.asarray(t, dtype=float)
    eps = tau * tau / 6.0
    decay = np.exp(-2.0 * lam * (1.0 - eps) * t)
    out = n0 * decay * (1.0 - 0.5 * eps * n0 * n0 * (1.0 - decay * decay))
    return float(out) if out.ndim == 0 else out


def _expect_lowering(rho: np.ndarray, weights: np.ndarray) -> complex:
    """Tr(rho w(N) a) = sum_n rho[n+1, n] w(n) sqrt(n+1)."""
    d = rho.shape[0]
    n = np.arange(d - 1)
    return complex(np.sum(np.diagonal(rho, offset=-1) * weights[: d - 1] * np.sqrt(n + 1.0)))


def coherence_rhs(model: OscillatorModel, bath: BathModel, rho: np.ndarray) -> tuple[complex, complex]:
    """(d<a>/dt, d<Omega(N) a>/dt) for a zero-temperature thermal bath.

    d<a>/dt = -i w <Om(N) a> - lam <(phi(N+1) + phi(N) - 2 N f(N) f(N+1)) a>
    d<Om(N) a>/dt = -i w <Om(N)^2 a>
                    - lam <(Om(N)(phi(N+1) + phi(N)) - 2 Om(N-1) N f(N) f(N+1)) a>
    """
    if not (bath.is_thermal and bath.temperature == 0):
        raise ValueError("coherence equations are only available for a T = 0 thermal bath")
    rho = np.asarray(rho)
    d = model.dim
    ph = model.phi_values()
    om = model.omega_values()
    n = np.arange(d, dtype=float)
    nff = np.sqrt(ph[:d] * ph[1 : d + 1] * n / (n + 1.0))  # N f(N) f(N+1), zero at n = 0
    om_below = np.zeros(d)
    om_below[1:] = om[:-1]
    w, lam = model.omega, bath.lam
    da = -1j * w * _expect_lowering(rho, om) - lam * _expect_lowering(rho, ph[1 : d + 1] + ph[:d] - 2.0 * nff)
    dom = -1j * w * _expect_lowering(rho, om**2) - lam * _expect_lowering(
        rho, om * (ph[1 : d + 1] + ph[:d]) - 2.0 * om_below * nff
    )
    return da, dom


def expect_a(rho: np.ndarray) -> complex:
    return _expect_lowering(np.asarray(rho), np.ones(rho.shape[0]))


def expect_omega_a(model: OscillatorModel, rho: np.ndarray) -> complex:
    return _expect_lowering(np.asarray(rho), model.omega_values())
