"""Dissipative generator of the damped deformed oscillator.

The full equation for rho_mn couples each element to at most eight
neighbours (m +- 1, n +- 1), (m +- 1, n -+ 1), (m +- 2, n), (m, n +- 2), so
the generator is stored as dense coefficient bands and applied by shifted
slicing rather than as a d^2 x d^2 matrix.

Truncation: elements outside |0>..|n_max> are treated as zero ("drop").
Population flow out of n_max therefore leaks trace; the population-only
generator additionally offers "reflecting", which switches off the upward
rate out of n_max so that probability is conserved exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .algebra import OscillatorModel, ladder_matrices
from .bath import BathModel

DROP = "drop"
REFLECTING = "reflecting"
POLICIES = (DROP, REFLECTING)


def _check_pair(model: OscillatorModel, bath: BathModel) -> None:
    if not np.isclose(bath.omega, model.omega, rtol=1e-14, atol=0.0):
        raise ValueError(f"bath built for omega={bath.omega}, model has omega={model.omega}")


def _check_rho(model: OscillatorModel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"density matrix has shape {rho.shape}, expected {(model.dim, model.dim)}")
    return rho


@dataclass(frozen=True)
class LevelCoefficients:
    """Per-level quantities shared by every generator form.

    ``dp[k] = D_+(Omega(k))`` and ``g[k] = D_-(Omega(k)) + i D_pq(Omega(k))``
    for k = 0..n_max; ``amp[k] = sqrt(phi(k))`` for k = 0..n_max+2.
    """

    phi: np.ndarray
    amp: np.ndarray
    energies: np.ndarray
    dp: np.ndarray
    g: np.ndarray
    lam: float

    @classmethod
    def build(cls, model: OscillatorModel, bath: BathModel) -> "LevelCoefficients":
        _check_pair(model, bath)
        phi = model.phi_values()
        om = model.omega_values()
        dp = np.asarray(bath.d_plus(om), dtype=float)
        g = np.asarray(bath.d_minus(om), dtype=float) + 1j * np.asarray(bath.d_pq(om), dtype=float)
        return cls(phi=phi, amp=np.sqrt(phi), energies=model.energies(), dp=dp, g=g, lam=bath.lam)

    def dp_below(self) -> np.ndarray:
        """D_+(Omega(k-1)) for k = 0..n_max; the k = 0 entry is always multiplied by phi(0) = 0."""
        out = np.zeros_like(self.dp)
        out[1:] = self.dp[:-1]
        return out


@dataclass(frozen=True)
class TransitionRates:
    t_plus: np.ndarray
    t_minus: np.ndarray


def _rates_from(coef: LevelCoefficients) -> TransitionRates:
    d = len(coef.dp)
    t_plus = coef.phi[1 : d + 1] * (2.0 * coef.dp - coef.lam)
    t_minus = coef.phi[:d] * (2.0 * coef.dp_below() + coef.lam)
    t_minus[0] = 0.0
    return TransitionRates(t_plus=t_plus, t_minus=t_minus)


def all_transition_rates(model: OscillatorModel, bath: BathModel) -> TransitionRates:
    """t_+(n) = phi(n+1)(2D_+(Omega(n)) - lambda), t_-(n) = phi(n)(2D_+(Omega(n-1)) + lambda)."""
    return _rates_from(LevelCoefficients.build(model, bath))


def transition_rates(model: OscillatorModel, bath: BathModel, n: int) -> tuple[float, float]:
    if not 0 <= n <= model.n_max:
        raise IndexError(f"level {n} outside basis 0..{model.n_max}")
    r = all_transition_rates(model, bath)
    return float(r.t_plus[n]), float(r.t_minus[n])


class FullGenerator:
    """Right-hand side d rho / dt of the number-representation master equation.

    Each band holds the coefficient multiplying a shifted copy of rho; the
    shift is the pair of row/column offsets of the source element.
    """

    def __init__(self, model: OscillatorModel, bath: BathModel, policy: str = DROP):
        if policy != DROP:
            raise ValueError("the full equation only supports the 'drop' truncation policy")
        self.model = model
        self.bath = bath
        self.policy = policy
        coef = LevelCoefficients.build(model, bath)
        self.coef = coef
        d = model.dim
        lam = coef.lam
        phi, s, dp, g = coef.phi, coef.amp, coef.dp, coef.g
        dpb = coef.dp_below()
        k = np.arange(d)

        # loss per index: phi(k+1)(D_+(Om(k)) - lam/2) + phi(k)(D_+(Om(k-1)) + lam/2)
        loss = phi[1 : d + 1] * (dp - 0.5 * lam) + phi[:d] * (dpb + 0.5 * lam)
        e = coef.energies
        self.diag = -1j * (e[:, None] - e[None, :]) - (loss[:, None] + loss[None, :])

        self.bands: dict[tuple[int, int], np.ndarray] = {}
        # sqrt(phi_m phi_n) rather than s_m s_n: exact phi on the diagonal
        ph_up = phi[k + 1]
        # rho_{m+1,n+1}
        self.bands[(1, 1)] = np.sqrt(np.outer(ph_up, ph_up)) * (dp[:, None] + dp[None, :] + lam)
        # rho_{m-1,n-1}
        self.bands[(-1, -1)] = np.sqrt(np.outer(phi[k], phi[k])) * (dpb[:, None] + dpb[None, :] - lam)

        gb = np.zeros(d, dtype=complex)
        gb[1:] = g[:-1]
        self.decoupled = bool(np.all(g == 0))
        if not self.decoupled:
            g_up = np.zeros(d, dtype=complex)  # g(k+1)
            g_up[:-1] = g[1:]
            g_dn2 = np.zeros(d, dtype=complex)  # g(k-2)
            g_dn2[2:] = g[:-2]
            s2 = s[k + 1] * s[k + 2]  # sqrt(phi(k+1) phi(k+2))
            s2_dn = np.zeros(d)  # sqrt(phi(k) phi(k-1))
            s2_dn[1:] = s[k[1:]] * s[k[1:] - 1]
            # rho_{m+1,n-1}
            self.bands[(1, -1)] = -(s[k + 1][:, None] * s[k][None, :]) * (np.conj(g)[:, None] + np.conj(gb)[None, :])
            # rho_{m-1,n+1}
            self.bands[(-1, 1)] = -(s[k][:, None] * s[k + 1][None, :]) * (gb[:, None] + g[None, :])
            # rho_{m+2,n}, rho_{m,n+2}, rho_{m-2,n}, rho_{m,n-2}
            ones = np.ones(d)
            self.bands[(2, 0)] = (s2 * np.conj(g_up))[:, None] * ones[None, :]
            self.bands[(0, 2)] = ones[:, None] * (s2 * g_up)[None, :]
            self.bands[(-2, 0)] = (s2_dn * g_dn2)[:, None] * ones[None, :]
            self.bands[(0, -2)] = ones[:, None] * (s2_dn * np.conj(g_dn2))[None, :]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = _check_rho(self.model, rho)
        out = self.diag * rho
        d = self.model.dim
        for (dm, dn), c in self.bands.items():
            # out[m, n] += c[m, n] * rho[m+dm, n+dn] for in-range sources
            rs = slice(max(0, -dm), min(d, d - dm))
            cs = slice(max(0, -dn), min(d, d - dn))
            rsrc = slice(rs.start + dm, rs.stop + dm)
            csrc = slice(cs.start + dn, cs.stop + dn)
            out[rs, cs] += c[rs, cs] * rho[rsrc, csrc]
        return out

    def population_restriction(self) -> np.ndarray:
        """Dense tridiagonal matrix acting on the diagonal when the bath decouples."""
        if not self.decoupled:
            raise ValueError("diagonal is coupled to coherences (D_- or D_pq nonzero)")
        d = self.model.dim
        mat = np.zeros((d, d))
        k = np.arange(d)
        mat[k, k] = self.diag[k, k].real
        mat[k[:-1], k[:-1] + 1] = self.bands[(1, 1)][k[:-1], k[:-1]].real
        mat[k[1:], k[1:] - 1] = self.bands[(-1, -1)][k[1:], k[1:]].real
        return mat


def apply_full_generator(model: OscillatorModel, bath: BathModel, rho: np.ndarray) -> np.ndarray:
    return FullGenerator(model, bath)(rho)


@dataclass(frozen=True)
class PopulationGenerator:
    """Tridiagonal birth-death generator, dP/dt = matrix @ P."""

    matrix: sparse.csr_array
    rates: TransitionRates
    policy: str

    def __call__(self, p: np.ndarray) -> np.ndarray:
        return self.matrix @ p

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def build_population_generator(model: OscillatorModel, bath: BathModel, policy: str = REFLECTING) -> PopulationGenerator:
    """dP(n)/dt = t_+(n-1)P(n-1) + t_-(n+1)P(n+1) - (t_+(n) + t_-(n))P(n).

    With ``policy="drop"`` the outflow t_+(n_max) P(n_max) leaves the basis;
    with ``"reflecting"`` t_+(n_max) is set to zero.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown truncation policy {policy!r}")
    rates = all_transition_rates(model, bath)
    tp = rates.t_plus.copy()
    if policy == REFLECTING:
        tp[-1] = 0.0
        rates = TransitionRates(t_plus=tp, t_minus=rates.t_minus)
    tm = rates.t_minus
    main = -(tp + tm)
    mat = sparse.diags_array([tp[:-1], main, tm[1:]], offsets=[-1, 0, 1], format="csr")
    return PopulationGenerator(matrix=mat, rates=rates, policy=policy)


def operator_form_rhs(model: OscillatorModel, bath: BathModel, rho: np.ndarray) -> np.ndarray:
    """Same equation built from matrix products of the ladder operators.

    -i[H, rho] + ( [[D_+ A, rho], A^dag] - [[A^dag G, rho], A^dag]
                   - (lambda/2)[A^dag, {A, rho}] + h.c. )

    with A = a f(N), D_+ = diag D_+(Omega(N)), G = diag(D_- + i D_pq)(Omega(N)).
    Only exact on states whose support stays away from the basis edge.
    """
    rho = _check_rho(model, rho)
    coef = LevelCoefficients.build(model, bath)
    a, ad, _ = ladder_matrices(model)
    h = np.diag(coef.energies)
    dp = np.diag(coef.dp)
    gm = np.diag(coef.g)
    lam = coef.lam

    def comm(x, y):
        return x @ y - y @ x

    b = dp @ a
    c = ad @ gm
    part = comm(comm(b, rho), ad) - comm(comm(c, rho), ad) - 0.5 * lam * comm(ad, a @ rho + rho @ a)
    # h.c. written out term by term so the map stays linear in rho
    bd, cd = b.conj().T, c.conj().T
    hc = comm(a, comm(rho, bd)) - comm(a, comm(rho, cd)) - 0.5 * lam * comm(rho @ ad + ad @ rho, a)
    return -1j * comm(h, rho) + part + hc
