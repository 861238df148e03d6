"""System parameters, derived rates and approximation-validity checks.

All rates are expressed in units of the output decay rate ``kappa`` (``kappa = 1``
by default) and all times in units of ``1/kappa``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import DomainError, InstabilityError

# Flat config keys, mapped to dataclass field names.
CONFIG_KEYS = {
    "omega_c": "omega_c",
    "omega_q": "omega_q",
    "omega_p": "omega_p",
    "j": "J",
    "g": "g",
    "lambda": "lam",
    "kappa": "kappa",
    "kappa_int": "kappa_int",
    "kappa_left_int": "kappa_left_int",
    "eta": "eta",
    "chi": "chi",
}


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and frequencies of the two-cavity readout setup.

    Parameters
    ----------
    omega_c, omega_q, omega_p
        Cavity, qubit and pump frequencies. Only their relations matter in the
        rotating frame (``omega_q = omega_c``, ``omega_p = 2 omega_c``).
    J
        Tunnel coupling between the two cavities.
    g
        Jaynes-Cummings coupling of the qubit to the right cavity.
    lam
        Parametric (two-mode squeezing) drive amplitude.
    kappa
        Output-port decay rate of each normal mode.
    kappa_int
        Internal decay rate of each normal mode.
    kappa_left_int
        Internal decay rate of the left cavity (Purcell channel through the
        pumped cavity).
    eta
        External transmission loss in ``[0, 1]``.
    chi
        Optional dispersive coupling override. When ``None`` the coupling is
        derived from ``g``, ``J`` and ``lam``.
    """

    omega_c: float = 0.0
    omega_q: float = 0.0
    omega_p: float = 0.0
    J: float = 0.0
    g: float = 0.0
    lam: float = 0.0
    kappa: float = 1.0
    kappa_int: float = 0.0
    kappa_left_int: float = 0.0
    eta: float = 0.0
    chi: float | None = field(default=None)

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        for name in ("J", "g", "lam", "kappa_int", "kappa_left_int"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        if self.chi is not None and self.chi < 0:
            raise DomainError(f"chi must be non-negative, got {self.chi}")
        if self.chi is None and self.J == 0 and (self.g > 0 or self.lam > 0):
            raise DomainError("J is required (J > 0) when g > 0 or lambda > 0")

    @property
    def kappa_tot(self) -> float:
        return self.kappa + self.kappa_int

    @property
    def epsilon(self) -> float:
        return self.kappa_int / (self.kappa_int + self.kappa)

    @property
    def chi_eff(self) -> float:
        """Dispersive coupling used by the measurement formulas."""
        if self.chi is not None:
            return float(self.chi)
        if self.g == 0:
            return 0.0
        return derive_chi(self)

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedQuantities:
    chi: float
    n_sqz: float
    n_crit: float
    kappa_tot: float
    epsilon: float
    omega_E: float
    omega_O: float


@dataclass(frozen=True)
class Condition:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""


@dataclass(frozen=True)
class ValidityReport:
    conditions: tuple[Condition, ...]
    tol: float

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.conditions]

    def format(self) -> str:
        lines = [f"validity report (tol={self.tol:g}, strict '<')"]
        for c in self.conditions:
            flag = "PASS" if c.passed else "FAIL"
            line = f"  [{flag}] {c.name:<22s} value={c.value:.6g}  threshold={c.threshold:.6g}"
            if c.note:
                line += f"  ({c.note})"
            lines.append(line)
        return "\n".join(lines)


def derive_chi(params: SystemParams) -> float:
    """Dispersive coupling ``g^2/(2J) / (1 + lam^2/J^2)``."""
    if params.J == 0:
        raise DomainError("dispersive coupling undefined for J = 0")
    J = params.J
    return params.g**2 / (2.0 * J) / (1.0 + (params.lam / J) ** 2)


def _n_sqz(lam: float, kappa: float) -> float:
    half = kappa / 2.0
    if lam >= half:
        raise InstabilityError(f"lambda={lam} is not below the instability threshold {half}")
    return lam**2 / (half**2 - lam**2)


def n_sqz(params: SystemParams) -> float:
    """Intracavity photon number generated by the squeezing (lossless ``kappa``)."""
    return _n_sqz(params.lam, params.kappa)


def n_sqz_total_decay(params: SystemParams) -> float:
    """Same as :func:`n_sqz` with ``kappa`` replaced by ``kappa + kappa_int``."""
    return _n_sqz(params.lam, params.kappa_tot)


def n_crit(params: SystemParams) -> float:
    chi = params.chi_eff
    if chi == 0:
        raise DomainError("critical photon number undefined for chi = 0")
    return params.J / (4.0 * chi)


def derived(params: SystemParams) -> DerivedQuantities:
    chi = params.chi_eff
    try:
        nsq = n_sqz(params)
    except InstabilityError:
        nsq = math.inf
    return DerivedQuantities(
        chi=chi,
        n_sqz=nsq,
        n_crit=params.J / (4.0 * chi) if chi > 0 else math.inf,
        kappa_tot=params.kappa_tot,
        epsilon=params.epsilon,
        omega_E=params.omega_c + params.J,
        omega_O=params.omega_c - params.J,
    )


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.inf if num > 0 else 0.0
    return num / den


def validity_report(params: SystemParams, tol: float = 0.1, nbar: float | None = None) -> ValidityReport:
    """Evaluate every condition the dispersive, rotating-wave model relies on.

    Stability is tested against ``kappa_tot``; the rotating-wave and dispersive
    conditions against ``J``. A condition passes iff ``value < threshold``.
    """
    J = params.J
    chi = params.chi_eff
    rows = [
        ("stability", _ratio(params.lam, params.kappa_tot / 2.0), 1.0,
         "lambda / (kappa_tot/2)"),
        ("rwa_two_mode", _ratio(params.lam, 4.0 * J), tol, "lambda / 4J"),
        ("dispersive_squeezing", _ratio(params.lam * chi, 4.0 * J**2), tol,
         "lambda chi / 4J^2"),
        ("weak_hybridization", _ratio(params.g, J), tol, "g / J"),
        ("resolved_modes", _ratio(params.kappa, J), tol, "kappa / J"),
    ]
    if nbar is not None:
        ncrit = J / (4.0 * chi) if chi > 0 else math.inf
        rows.append(("below_n_crit", _ratio(nbar, ncrit), 1.0, "nbar / n_crit"))
    conditions = tuple(
        Condition(name, float(value), float(threshold), bool(value < threshold), note)
        for name, value, threshold, note in rows
    )
    return ValidityReport(conditions=conditions, tol=tol)


def params_from_mapping(values: dict, base: SystemParams | None = None) -> SystemParams:
    """Build parameters from flat config keys (``j``, ``lambda``, ...)."""
    updates = {}
    for key, raw in values.items():
        k = key.strip().lower().replace("-", "_")
        if k not in CONFIG_KEYS:
            raise DomainError(f"unknown parameter key {key!r}")
        if raw is None:
            continue
        updates[CONFIG_KEYS[k]] = float(raw)
    base = base or SystemParams()
    merged = {**asdict(base), **updates}
    return SystemParams(**merged)


def read_config(path: str | Path) -> dict:
    """Read a flat ``key = value`` file (``#`` comments) or a flat JSON object."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return dict(json.loads(text))
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split(sep, 1))
        values[key] = value
    return values


def load_params(path: str | Path) -> SystemParams:
    return params_from_mapping(read_config(path))
