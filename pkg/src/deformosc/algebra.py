"""Deformed oscillator algebra on a truncated Fock basis.

Every formula touches the deformation function f only through the product
phi(n) = n f(n)^2, which is finite at n = 0 even when f(0) is not.  For the
q-oscillator phi(n) is the box number [n] = sinh(n tau) / sinh(tau), tau = ln q.

Units: hbar = k_B = m = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

IDENTITY = "identity"
Q_DEFORMATION = "q"
CUSTOM = "custom"
_KINDS = (IDENTITY, Q_DEFORMATION, CUSTOM)


def bracket(tau: float, n):
    """Box number [n] = sinh(n tau)/sinh(tau), equal to n at tau = 0.

    Works elementwise on arrays. Symmetric under tau -> -tau.
    """
    n = np.asarray(n, dtype=float)
    if tau == 0.0:
        out = n.copy()
    else:
        out = np.sinh(n * tau) / np.sinh(tau)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DeformationSpec:
    """Which deformation function to use.

    ``kind`` is one of ``"identity"``, ``"q"`` or ``"custom"``. The q case
    takes ``tau = ln q`` (q real and positive). The custom case takes a table
    ``phi_table[n] = n f(n)^2`` for n = 0..n_max+2.
    """

    kind: str = IDENTITY
    tau: float = 0.0
    phi_table: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown deformation kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == Q_DEFORMATION:
            if not np.isfinite(self.tau):
                raise ValueError("tau must be finite")
        elif self.tau != 0.0:
            raise ValueError("tau is only meaningful for the q-deformation")
        if self.kind == CUSTOM:
            if self.phi_table is None:
                raise ValueError("custom deformation needs phi_table")
            table = np.asarray(self.phi_table, dtype=float)
            if table.ndim != 1 or len(table) < 2:
                raise ValueError("phi_table must be a 1-d sequence with at least two entries")
            if table[0] != 0.0:
                raise ValueError("phi_table[0] must be 0")
            if not np.all(np.isfinite(table)) or np.any(table[1:] <= 0.0):
                raise ValueError("phi_table[n] must be finite and > 0 for n >= 1")
            object.__setattr__(self, "phi_table", tuple(float(v) for v in table))
        elif self.phi_table is not None:
            raise ValueError("phi_table is only meaningful for the custom deformation")

    @classmethod
    def identity(cls) -> "DeformationSpec":
        return cls(IDENTITY)

    @classmethod
    def q_deformation(cls, tau: float) -> "DeformationSpec":
        return cls(Q_DEFORMATION, tau=float(tau))

    @classmethod
    def from_q(cls, q: float) -> "DeformationSpec":
        if not q > 0:
            raise ValueError("q must be real and positive")
        return cls.q_deformation(np.log(q))

    @classmethod
    def custom(cls, phi_table: Sequence[float]) -> "DeformationSpec":
        return cls(CUSTOM, phi_table=tuple(phi_table))

    @property
    def max_index(self) -> int | None:
        """Largest n for which phi(n) is defined (None means unbounded)."""
        if self.kind == CUSTOM:
            return len(self.phi_table) - 1
        return None

    def phi(self, n):
        """phi(n) = n f(n)^2, vectorised over ``n``."""
        n_arr = np.asarray(n)
        if np.any(n_arr < 0):
            raise ValueError("phi is defined for n >= 0 only")
        if self.kind == IDENTITY:
            out = n_arr.astype(float)
        elif self.kind == Q_DEFORMATION:
            out = np.asarray(bracket(self.tau, n_arr), dtype=float)
        else:
            if np.any(n_arr > self.max_index):
                raise IndexError(
                    f"phi({int(np.max(n_arr))}) requested but custom table stops at {self.max_index}"
                )
            out = np.asarray(self.phi_table, dtype=float)[n_arr.astype(int)]
        return float(out) if out.ndim == 0 else out

    def omega_shift(self, n):
        """Level-dependent frequency factor (phi(n+2) - phi(n)) / 2."""
        n_arr = np.asarray(n)
        if self.kind == IDENTITY:
            out = np.ones(n_arr.shape)
        else:
            out = 0.5 * (np.asarray(self.phi(n_arr + 2)) - np.asarray(self.phi(n_arr)))
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        if self.kind == Q_DEFORMATION:
            return {"kind": self.kind, "tau": self.tau}
        if self.kind == CUSTOM:
            return {"kind": self.kind, "phi_table": list(self.phi_table)}
        return {"kind": self.kind}


def phi(deformation: DeformationSpec, n):
    return deformation.phi(n)


def omega_shift(deformation: DeformationSpec, n):
    return deformation.omega_shift(n)


@dataclass(frozen=True)
class OscillatorModel:
    """Deformed oscillator of frequency ``omega`` on the basis |0>..|n_max>."""

    omega: float
    deformation: DeformationSpec
    n_max: int

    def __post_init__(self):
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValueError("omega must be positive")
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError("n_max must be an integer >= 2")
        object.__setattr__(self, "n_max", int(self.n_max))
        top = self.deformation.max_index
        if top is not None and top < self.n_max + 2:
            raise ValueError(
                f"custom phi_table needs n_max+3 = {self.n_max + 3} entries, got {top + 1}"
            )

    @property
    def dim(self) -> int:
        return self.n_max + 1

    def phi_values(self) -> np.ndarray:
        """phi(0..n_max+2)."""
        return np.asarray(self.deformation.phi(np.arange(self.n_max + 3)), dtype=float)

    def omega_values(self) -> np.ndarray:
        """Omega(0..n_max)."""
        return np.asarray(self.deformation.omega_shift(np.arange(self.n_max + 1)), dtype=float)

    def energies(self) -> np.ndarray:
        ph = self.phi_values()
        return 0.5 * self.omega * (ph[1 : self.n_max + 2] + ph[: self.n_max + 1])

    def with_n_max(self, n_max: int) -> "OscillatorModel":
        return OscillatorModel(self.omega, self.deformation, n_max)


def energy_level(model: OscillatorModel, n: int) -> float:
    """E_n = (omega/2)(phi(n+1) + phi(n))."""
    if not 0 <= n <= model.n_max:
        raise IndexError(f"level {n} outside basis 0..{model.n_max}")
    ph = model.deformation.phi
    return 0.5 * model.omega * (ph(n + 1) + ph(n))


def ladder_matrices(model: OscillatorModel):
    """Dense (A, A^dagger, N) on the truncated basis.

    A[n-1, n] = sqrt(phi(n)); the creation operator loses its last column
    (|n_max> -> |n_max+1> leaves the basis).
    """
    d = model.dim
    amp = np.sqrt(model.phi_values()[1:d])
    a = np.zeros((d, d), dtype=complex)
    a[np.arange(d - 1), np.arange(1, d)] = amp
    num = np.diag(np.arange(d, dtype=float)).astype(complex)
    return a, a.conj().T.copy(), num


def hamiltonian_matrix(model: OscillatorModel) -> np.ndarray:
    return np.diag(model.energies()).astype(complex)
