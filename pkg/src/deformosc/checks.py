"""Invariant suite run by ``deformosc validate`` on a user's parameters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import OscillatorModel, hamiltonian_matrix, ladder_matrices
from .bath import BathModel, validate_bath
from .dynamics import IntegratorConfig, evolve_populations, mean_N_rhs
from .liouvillian import DROP, REFLECTING, FullGenerator, build_population_generator, operator_form_rhs
from .stationary import detailed_balance_residual, steady_populations, thermal_boltzmann


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": self.value, "tolerance": self.tolerance, "note": self.note}


def random_interior_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian matrix supported on indices 2..dim-3, unit Frobenius norm."""
    rho = np.zeros((dim, dim), dtype=complex)
    k = dim - 4
    if k < 1:
        raise ValueError("need n_max >= 4 for interior-supported states")
    block = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    block = block + block.conj().T
    rho[2 : dim - 2, 2 : dim - 2] = block / np.linalg.norm(block)
    return rho


def _check(name, value, tol, note=""):
    value = float(value)
    return Check(name, bool(value <= tol), value, tol, note)


def run_checks(model: OscillatorModel, bath: BathModel, seed: int = 0, samples: int = 20) -> list[Check]:
    rng = np.random.default_rng(seed)
    out: list[Check] = []
    dfm = model.deformation
    e = model.energies()
    om = model.omega_values()

    out.append(_check("phi_zero_at_ground", abs(dfm.phi(0)), 0.0))
    out.append(_check("spectrum_matches_hamiltonian", np.max(np.abs(np.diag(hamiltonian_matrix(model)).real - e)), 0.0))
    out.append(_check("level_spacing_equals_omega_shift", np.max(np.abs(np.diff(e) - model.omega * om[:-1])), 1e-13))
    a, ad, num = ladder_matrices(model)
    inner = slice(0, model.n_max)
    out.append(_check("commutator_A_N", np.max(np.abs((a @ num - num @ a - a)[inner, inner])), 1e-13))
    comm = a @ ad - ad @ a
    ph = model.phi_values()
    expected = ph[1 : model.dim] - ph[: model.dim - 1]
    out.append(_check("commutator_A_Adag", np.max(np.abs(np.diag(comm)[: model.n_max].real - expected)), 1e-12))

    report = validate_bath(bath, model)
    out.append(Check("bath_validity", report.ok, float(len(report.issues)), 0.0, "number of flagged levels"))
    if not report.ok and any(i.check == "omega_positive" for i in report.issues):
        return out

    gen = FullGenerator(model, bath)
    if model.n_max >= 4:
        tr_err = herm_err = oracle_err = 0.0
        for _ in range(samples):
            rho = random_interior_hermitian(model.dim, rng)
            out_rho = gen(rho)
            tr_err = max(tr_err, abs(np.trace(out_rho)))
            herm_err = max(herm_err, np.max(np.abs(out_rho - out_rho.conj().T)))
            oracle_err = max(oracle_err, np.max(np.abs(out_rho - operator_form_rhs(model, bath, rho))))
        out.append(_check("generator_trace_preserving", tr_err, 1e-12))
        out.append(_check("generator_hermiticity", herm_err, 1e-12))
        out.append(_check("generator_matches_operator_form", oracle_err, 1e-12))
        if bath.is_thermal:
            err = 0.0
            n_op = np.arange(model.dim)
            for _ in range(samples):
                rho = random_interior_hermitian(model.dim, rng)
                rho[np.diag_indices(model.dim)] = np.abs(rho.diagonal())
                lhs = np.real(np.sum(n_op * np.diagonal(gen(rho))))
                err = max(err, abs(lhs - mean_N_rhs(model, bath, rho)))
            out.append(_check("mean_N_law", err, 1e-10))

    if gen.decoupled:
        pop = build_population_generator(model, bath, DROP).toarray()
        out.append(_check("decoupled_population_equation", np.max(np.abs(gen.population_restriction() - pop)), 1e-14))
        p_rand = rng.random(model.dim)
        full = gen(np.diag(p_rand).astype(complex))
        out.append(_check("diagonal_stays_diagonal", np.max(np.abs(full - np.diag(np.diagonal(full)))), 0.0))

    if report.ok and bath.lam > 0:
        p = steady_populations(model, bath)
        out.append(_check("detailed_balance", detailed_balance_residual(model, bath, p), 1e-14))
        refl = build_population_generator(model, bath, REFLECTING)
        out.append(_check("steady_state_stationary", np.max(np.abs(refl(p))), 1e-12))
        if bath.is_thermal:
            out.append(_check("steady_state_is_boltzmann", np.max(np.abs(p - thermal_boltzmann(model, bath.temperature))), 1e-12))
        p0 = np.zeros(model.dim)
        p0[min(1, model.n_max)] = 1.0
        traj = evolve_populations(model, bath, p0, IntegratorConfig(t_final=1.0 / bath.lam, samples=[1.0 / bath.lam]))
        out.append(_check("population_conservation", abs(traj.trace[-1] - 1.0), 1e-10))
    return out
