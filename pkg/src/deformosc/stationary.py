"""Steady states, detailed balance, partition functions and equilibrium energy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import DeformationSpec, OscillatorModel, Q_DEFORMATION, IDENTITY
from .bath import BathModel, thermal_bath
from .liouvillian import all_transition_rates

TAIL_TOL = 1e-12
N_MAX_CAP = 4096


def _ratios(deformation: DeformationSpec, bath: BathModel, n_max: int) -> np.ndarray:
    """(2D_+(Om(k-1)) - lam) / (2D_+(Om(k-1)) + lam) for k = 1..n_max."""
    om = np.asarray(deformation.omega_shift(np.arange(n_max)), dtype=float)
    if np.any(om <= 0):
        raise ValueError("Omega(n) must be positive for a steady state")
    dp2 = 2.0 * np.asarray(bath.d_plus(om), dtype=float)
    num = dp2 - bath.lam
    den = dp2 + bath.lam
    if np.any(den <= 0):
        raise ValueError("2 D_+ + lambda must be positive")
    r = num / den
    if np.any(r < 0):
        k = int(np.argmax(r < 0)) + 1
        raise ValueError(f"negative population ratio at n={k}: bath fails validation")
    return r


def steady_populations(model: OscillatorModel, bath: BathModel) -> np.ndarray:
    """P(n) = P(0) prod_{k=1..n} (2D_+(Om(k-1)) - lam)/(2D_+(Om(k-1)) + lam), normalised on the basis.

    This is also the exact null vector of the reflecting population
    generator. The tail mass is ``p[-1]``.
    """
    if bath.lam == 0:
        raise ValueError("steady state is undetermined for lambda = 0")
    r = _ratios(model.deformation, bath, model.n_max)
    p = np.concatenate(([1.0], np.cumprod(r)))
    return p / p.sum()


def detailed_balance_residual(model: OscillatorModel, bath: BathModel, p: np.ndarray) -> float:
    """max_n |t_-(n)P(n) - t_+(n-1)P(n-1)|, relative to the largest single flux."""
    p = np.asarray(p, dtype=float)
    rates = all_transition_rates(model, bath)
    down = rates.t_minus[1:] * p[1:]
    up = rates.t_plus[:-1] * p[:-1]
    scale = max(float(np.max(np.abs(down))), float(np.max(np.abs(up))))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(down - up)) / scale)


def thermal_boltzmann(model: OscillatorModel, temperature: float) -> np.ndarray:
    """P(n) proportional to exp(-E_n/T) on the truncated basis; T = 0 gives the ground state."""
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    e = model.energies()
    if temperature == 0:
        p = np.zeros(model.dim)
        p[0] = 1.0
        return p
    w = np.exp(-(e - e[0]) / temperature)
    return w / w.sum()


def auto_n_max(
    deformation: DeformationSpec,
    bath: BathModel,
    tol: float = TAIL_TOL,
    cap: int = N_MAX_CAP,
) -> int:
    """Smallest n_max >= 2 whose steady-state tail mass P(n_max) is below ``tol``."""
    top = cap
    if deformation.max_index is not None:
        top = min(cap, deformation.max_index - 2)
    if bath.lam == 0:
        raise ValueError("steady state is undetermined for lambda = 0")
    r = _ratios(deformation, bath, top)
    p = np.concatenate(([1.0], np.cumprod(r)))
    p /= p.sum()
    below = np.nonzero(p[2:] < tol)[0]
    if len(below) == 0:
        raise ValueError(f"tail mass stays above {tol:g} up to n_max={top}")
    return int(below[0]) + 2


def auto_n_max_thermal(deformation: DeformationSpec, omega: float, temperature: float, tol: float = TAIL_TOL) -> int:
    if temperature == 0:
        return 2
    return auto_n_max(deformation, thermal_bath(1.0, temperature, omega), tol)


@dataclass
class PartitionResult:
    value: float
    terms_used: int
    tail_bound: float
    log_value: float


def partition_function(
    model: OscillatorModel | tuple[DeformationSpec, float],
    temperature: float,
    n_terms: int | None = None,
    tol: float = TAIL_TOL,
) -> PartitionResult:
    """Z = sum_n exp(-E_n/T), summed beyond the model's basis if needed.

    The tail after the last term is bounded by the geometric series with the
    ratio of the last two terms; this is a true bound when level spacings
    are non-decreasing (identity and q cases). With ``n_terms=None`` the
    number of terms doubles until the bound drops below ``tol``.
    """
    if isinstance(model, OscillatorModel):
        deformation, omega = model.deformation, model.omega
    else:
        deformation, omega = model
    if not temperature > 0:
        raise ValueError("partition function needs T > 0")

    def attempt(n: int) -> PartitionResult:
        if deformation.max_index is not None and n + 1 > deformation.max_index:
            raise ValueError(f"custom phi table too short for {n} terms")
        ph = np.asarray(deformation.phi(np.arange(n + 1)), dtype=float)
        e = 0.5 * omega * (ph[1:] + ph[:-1])
        x = -(e - e[0]) / temperature
        w = np.exp(x)
        s = math.fsum(w)
        if w[-1] == 0.0:
            bound = 0.0
        else:
            ratio = w[-1] / w[-2]
            if ratio >= 1.0:
                raise ValueError("partition-function terms are not decaying")
            bound = w[-1] * ratio / (1.0 - ratio)
        # one rounding per exp plus the correctly rounded sum
        bound += 4.0 * np.finfo(float).eps * s
        log_z = math.log(s) - e[0] / temperature
        scale = math.exp(-e[0] / temperature)
        return PartitionResult(value=s * scale, terms_used=n, tail_bound=float(bound * scale), log_value=float(log_z))

    if n_terms is not None:
        if n_terms < 2:
            raise ValueError("need at least two terms")
        return attempt(int(n_terms))
    n = 16
    while True:
        res = attempt(n)
        if res.tail_bound <= tol or n >= N_MAX_CAP:
            return res
        n = min(2 * n, N_MAX_CAP)


def c_coefficient(beta: float) -> float:
    """tau^2 coefficient of the equilibrium energy, in units of omega/2.

    c = e^b/(e^b - 1)^2 [ (e^b + 1)/(e^b - 1) - b (e^2b + 4e^b + 1)/(e^b - 1)^2 ],
    written in x = e^-b so it neither overflows nor loses c -> 0 at large b.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    x = math.exp(-beta)
    one_m = -math.expm1(-beta)
    return x / one_m**2 * ((1.0 + x) / one_m - beta * (1.0 + 4.0 * x + x * x) / one_m**2)


@dataclass
class EquilibriumReport:
    energy_numeric: float
    energy_smalltau: float | None
    c_coefficient: float
    beta: float
    n_max_used: int

    @property
    def difference(self) -> float | None:
        if self.energy_smalltau is None:
            return None
        return self.energy_numeric - self.energy_smalltau

    def to_dict(self) -> dict:
        return {
            "energy_numeric": self.energy_numeric,
            "energy_smalltau": self.energy_smalltau,
            "difference": self.difference,
            "c_coefficient": self.c_coefficient,
            "beta": self.beta if math.isfinite(self.beta) else None,
            "n_max_used": self.n_max_used,
        }


def numeric_equilibrium_energy(deformation: DeformationSpec, omega: float, temperature: float) -> tuple[float, int]:
    """Boltzmann-averaged energy with n_max grown until the tail mass is < 1e-12."""
    n_max = auto_n_max_thermal(deformation, omega, temperature)
    model = OscillatorModel(omega, deformation, n_max)
    p = thermal_boltzmann(model, temperature)
    return math.fsum(model.energies() * p), n_max


def equilibrium_energy(model: OscillatorModel, temperature: float) -> EquilibriumReport:
    """Numeric thermal energy next to (omega/2)(coth(omega/2T) + tau^2 c).

    The small-tau formula is reported for identity and q deformations only.
    The basis size is chosen from the temperature, not from ``model.n_max``.
    """
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    dfm, omega = model.deformation, model.omega
    tau = dfm.tau if dfm.kind == Q_DEFORMATION else 0.0
    has_formula = dfm.kind in (Q_DEFORMATION, IDENTITY)
    if temperature == 0:
        e0 = 0.5 * omega * float(dfm.phi(1))
        return EquilibriumReport(e0, 0.5 * omega if has_formula else None, 0.0, math.inf, 2)
    beta = omega / temperature
    c = c_coefficient(beta)
    e_num, n_used = numeric_equilibrium_energy(dfm, omega, temperature)
    e_small = 0.5 * omega * (1.0 / math.tanh(0.5 * beta) + tau * tau * c) if has_formula else None
    return EquilibriumReport(e_num, e_small, c, beta, n_used)


def richardson_tau2_coefficient(omega: float, temperature: float, taus=(0.01, 0.02, 0.04)) -> float:
    """Extrapolate (E(tau) - E(0))/tau^2 to tau -> 0 from three tau values in ratio 2.

    The quotient has an even expansion a + b tau^2 + O(tau^4); two rounds of
    Richardson elimination remove the tau^2 and tau^4 terms.
    """
    t1, t2, t3 = taus
    if not (math.isclose(t2, 2 * t1) and math.isclose(t3, 2 * t2)):
        raise ValueError("taus must form a ratio-2 sequence")
    e0, _ = numeric_equilibrium_energy(DeformationSpec.identity(), omega, temperature)
    g = [(numeric_equilibrium_energy(DeformationSpec.q_deformation(t), omega, temperature)[0] - e0) / t**2 for t in taus]
    r1 = (4.0 * g[0] - g[1]) / 3.0
    r2 = (4.0 * g[1] - g[2]) / 3.0
    return (16.0 * r1 - r2) / 15.0
