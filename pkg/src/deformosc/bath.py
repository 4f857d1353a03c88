"""Environment coefficients as functions of the frequency factor Omega.

A bath supplies D_pp(x), D_qq(x), D_pq(x) and a constant dissipation rate
lambda.  The master equation only needs the combinations

    D_+(x) = (omega D_qq(x) + D_pp(x)/omega) / 2
    D_-(x) = (omega D_qq(x) - D_pp(x)/omega) / 2

together with D_pq(x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import OscillatorModel

THERMAL = "thermal"
CONSTANT = "constant"
TABLE = "table"

# Beyond this coth(y) == 1 in double precision (2/expm1(2y) < 1e-300).
_COTH_CLAMP = 350.0


def coth(y):
    """Numerically stable coth for y > 0; exactly 1 past the overflow region."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("coth argument must be positive")
    out = np.ones_like(y)
    small = y < _COTH_CLAMP
    out[small] = 1.0 + 2.0 / np.expm1(2.0 * y[small])
    return float(out) if out.ndim == 0 else out


def _as_float(x, out):
    out = np.asarray(out, dtype=float)
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class BathModel:
    """Diffusion coefficients D_pp, D_qq, D_pq as functions of Omega, plus lambda.

    Build instances with :func:`thermal_bath`, :func:`constant_bath` or
    :func:`table_bath`; ``params`` records the constructor arguments so the
    bath can be echoed to a config file.
    """

    lam: float
    omega: float
    dpp: Callable
    dqq: Callable
    dpq: Callable
    label: str = ""
    kind: str = CONSTANT
    temperature: float | None = None
    params: dict = field(default_factory=dict, compare=False)
    # closed forms for D_+ / D_- when available, avoiding omega*(x/omega) rounding
    dplus_fn: Callable | None = field(default=None, compare=False)
    dminus_fn: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be >= 0")
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValueError("omega must be positive")

    @property
    def is_thermal(self) -> bool:
        return self.kind == THERMAL

    def d_plus(self, x):
        if self.dplus_fn is not None:
            return _as_float(x, self.dplus_fn(x))
        return _as_float(x, 0.5 * (self.omega * np.asarray(self.dqq(x)) + np.asarray(self.dpp(x)) / self.omega))

    def d_minus(self, x):
        if self.dminus_fn is not None:
            return _as_float(x, self.dminus_fn(x))
        return _as_float(x, 0.5 * (self.omega * np.asarray(self.dqq(x)) - np.asarray(self.dpp(x)) / self.omega))

    def d_pq(self, x):
        return _as_float(x, self.dpq(x))

    def decouples(self, x) -> bool:
        """True when D_- and D_pq vanish at every probed Omega value."""
        return bool(np.all(np.asarray(self.d_minus(x)) == 0) and np.all(np.asarray(self.d_pq(x)) == 0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def d_plus(bath: BathModel, x):
    return bath.d_plus(x)


def d_minus(bath: BathModel, x):
    return bath.d_minus(x)


def d_pq(bath: BathModel, x):
    return bath.d_pq(x)


def thermal_bath(lam: float, temperature: float, omega: float) -> BathModel:
    """Thermal bath: omega D_qq = D_pp/omega = (lambda/2) coth(omega x / 2T), D_pq = 0.

    At T = 0 the coth factor is replaced by its limit 1.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if not omega > 0:
        raise ValueError("omega must be positive")
    lam, temperature, omega = float(lam), float(temperature), float(omega)

    def noise(x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("thermal coefficients need Omega > 0")
        if temperature == 0.0:
            return np.full(x.shape, 0.5 * lam)
        with np.errstate(over="ignore"):  # tiny T: the argument overflows to inf and coth -> 1
            y = omega * x / (2.0 * temperature)
        return 0.5 * lam * np.asarray(coth(y))

    def dpp(x):
        return omega * noise(x)

    def dqq(x):
        return noise(x) / omega

    def dpq(x):
        return np.zeros(np.shape(x))

    return BathModel(
        lam=lam,
        omega=omega,
        dpp=dpp,
        dqq=dqq,
        dpq=dpq,
        label=f"thermal(lambda={lam:g}, T={temperature:g})",
        kind=THERMAL,
        temperature=temperature,
        params={"lambda": lam, "temperature": temperature},
        dplus_fn=noise,
        dminus_fn=dpq,
    )


def constant_bath(lam: float, omega: float, dpp: float, dqq: float, dpq: float = 0.0) -> BathModel:
    """Omega-independent diffusion coefficients."""
    vals = (float(dpp), float(dqq), float(dpq))
    return BathModel(
        lam=float(lam),
        omega=float(omega),
        dpp=lambda x: np.full(np.shape(x), vals[0]),
        dqq=lambda x: np.full(np.shape(x), vals[1]),
        dpq=lambda x: np.full(np.shape(x), vals[2]),
        label=f"constant(lambda={lam:g})",
        kind=CONSTANT,
        params={"lambda": float(lam), "dpp": vals[0], "dqq": vals[1], "dpq": vals[2]},
    )


def table_bath(
    lam: float,
    omega: float,
    x: Sequence[float],
    dpp: Sequence[float],
    dqq: Sequence[float],
    dpq: Sequence[float] | None = None,
) -> BathModel:
    """Tabulated coefficients, linearly interpolated (clamped outside the table)."""
    xs = np.asarray(x, dtype=float)
    if xs.ndim != 1 or len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise ValueError("table x values must be strictly increasing with at least two points")
    cols = {}
    for name, col in (("dpp", dpp), ("dqq", dqq), ("dpq", dpq if dpq is not None else np.zeros(len(xs)))):
        col = np.asarray(col, dtype=float)
        if col.shape != xs.shape:
            raise ValueError(f"table column {name} has length {len(col)}, expected {len(xs)}")
        cols[name] = col

    def interp(col):
        return lambda v: np.interp(np.asarray(v, dtype=float), xs, col)

    return BathModel(
        lam=float(lam),
        omega=float(omega),
        dpp=interp(cols["dpp"]),
        dqq=interp(cols["dqq"]),
        dpq=interp(cols["dpq"]),
        label=f"table(lambda={lam:g}, {len(xs)} points)",
        kind=TABLE,
        params={"lambda": float(lam), **{k: v.tolist() for k, v in (("x", xs), *cols.items())}},
    )


@dataclass
class Issue:
    check: str
    n: int
    value: float
    message: str


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)
    checked_levels: int = 0

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checked_levels": self.checked_levels,
            "issues": [vars(i) for i in self.issues],
        }


def validate_bath(bath: BathModel, model: OscillatorModel) -> ValidationReport:
    """Flag levels where the master equation would produce negative rates.

    Checks Omega(n) > 0, 2 D_+(Omega(n)) >= lambda (non-negative upward
    rates), diffusion positivity and D_+ >= |D_-| for n = 0..n_max.
    Violations are collected, never raised.
    """
    report = ValidationReport(checked_levels=model.dim)
    if not np.isclose(bath.omega, model.omega, rtol=1e-14, atol=0.0):
        report.issues.append(Issue("omega_match", -1, bath.omega, f"bath omega {bath.omega} != model omega {model.omega}"))
    for n, x in enumerate(model.omega_values()):
        if not x > 0:
            report.issues.append(Issue("omega_positive", n, float(x), f"Omega({n}) = {x:.6g} is not positive"))
            continue
        dp = bath.d_plus(x)
        if 2.0 * dp - bath.lam < 0:
            report.issues.append(
                Issue("upward_rate", n, float(2.0 * dp - bath.lam), f"2 D_+(Omega({n})) - lambda = {2.0 * dp - bath.lam:.6g} < 0")
            )
        for name, fn in (("dpp", bath.dpp), ("dqq", bath.dqq)):
            v = float(np.asarray(fn(x)))
            if v < 0:
                report.issues.append(Issue(f"{name}_positive", n, v, f"{name}(Omega({n})) = {v:.6g} < 0"))
        dm = bath.d_minus(x)
        if dp < abs(dm):
            report.issues.append(Issue("d_plus_dominates", n, float(dp - abs(dm)), f"D_+ < |D_-| at Omega({n})"))
    return report
