"""Model builders, state fidelities and the dispersive-versus-JC comparison."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DimensionError, DomainError
from ..params import SystemParams
from .operators import (
    HilbertConfig,
    build_h_dispersive,
    build_h_jc,
    build_h_jc_uncoupled,
    collapse_ops,
    mode_operators,
)
from .solver import NEGATIVITY_TOL, LindbladModel, SteadyStateResult, steady_state, validate_density_matrix

CONVERGENCE_RTOL = 1e-3


# ---------------------------------------------------------------- models

def dispersive_model(params: SystemParams, hilbert: HilbertConfig) -> LindbladModel:
    return LindbladModel(build_h_dispersive(params, hilbert), collapse_ops(params, hilbert))


def cavity_model(params: SystemParams, hilbert: HilbertConfig) -> LindbladModel:
    """Cavity-only dispersive model with the qubit pinned to ``|g>``."""
    cav = hilbert.without_qubit()
    return LindbladModel(build_h_dispersive(params, cav), collapse_ops(params, cav))


def jc_model(params: SystemParams, hilbert: HilbertConfig) -> LindbladModel:
    if not hilbert.qubit:
        raise DomainError("the Jaynes-Cummings model needs a qubit")
    return LindbladModel(build_h_jc(params, hilbert), collapse_ops(params, hilbert),
                         h_precond=build_h_jc_uncoupled(params, hilbert))


# ---------------------------------------------------------------- states

def state_fidelity(rho1, rho2) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`` (not squared)."""
    r1 = validate_density_matrix(rho1)
    r2 = validate_density_matrix(rho2)
    if r1.shape != r2.shape:
        raise DimensionError(f"state dimensions differ: {r1.shape} vs {r2.shape}")
    w1, v1 = np.linalg.eigh(0.5 * (r1 + r1.conj().T))
    keep = w1 > 0
    # sqrt(rho1) restricted to its support
    s = v1[:, keep] * np.sqrt(w1[keep])
    m = s.conj().T @ r2 @ s
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return min(max(f, 0.0), 1.0)


def _split(rho, hilbert: HilbertConfig):
    if not hilbert.qubit:
        raise DomainError("state has no qubit factor")
    rho = np.asarray(rho)
    if rho.shape != (hilbert.dim, hilbert.dim):
        raise DimensionError(f"state shape {rho.shape} does not match dimension {hilbert.dim}")
    n = hilbert.dim // 2
    return rho.reshape(n, 2, n, 2)


def reduced_qubit(rho, hilbert: HilbertConfig) -> np.ndarray:
    """Partial trace over both cavity modes."""
    return np.einsum("iaib->ab", _split(rho, hilbert))


def reduced_cavity(rho, hilbert: HilbertConfig) -> np.ndarray:
    """Partial trace over the qubit."""
    return np.einsum("iaja->ij", _split(rho, hilbert))


def qubit_excited_population(rho, hilbert: HilbertConfig) -> float:
    p = float(np.real(reduced_qubit(rho, hilbert)[1, 1]))
    if p < -NEGATIVITY_TOL or p > 1 + NEGATIVITY_TOL:
        raise DomainError(f"excited population {p} outside [0, 1]")
    return p


def embed_ground(rho_cavity) -> np.ndarray:
    """``rho_cavity (x) |g><g|`` in the even (x) odd (x) qubit ordering."""
    g = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    return np.kron(np.asarray(rho_cavity, dtype=complex), g)


def photon_numbers(rho, hilbert: HilbertConfig) -> tuple[float, float]:
    ops = mode_operators(hilbert)
    rho = np.asarray(rho)
    ne = float(np.real(np.sum(ops.n_even.diagonal() * rho.diagonal())))
    no = float(np.real(np.sum(ops.n_odd.diagonal() * rho.diagonal())))
    return ne, no


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class JcComparison:
    lam: float
    full_error: float
    qubit_error: float
    p_excited: float
    n_even: float
    n_odd: float
    n_even_dispersive: float
    n_odd_dispersive: float
    residual_jc: float
    residual_dispersive: float
    iterations: int
    method: str
    seconds: float

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def dispersive_reference(params: SystemParams, hilbert: HilbertConfig, **solver) -> SteadyStateResult:
    """Cavity-only dispersive steady state, tensored with ``|g><g|``."""
    res = steady_state(cavity_model(params, hilbert), **solver)
    res.rho = embed_ground(res.rho)
    return res


def jc_vs_dispersive_error(params: SystemParams, hilbert: HilbertConfig | None = None, **solver) -> JcComparison:
    """Errors of the dispersive description against the full JC steady state.

    ``full_error = 1 - F(rho_D, rho_JC)`` and ``qubit_error = 1 - sqrt(1 - P_e)``.
    """
    hilbert = hilbert or HilbertConfig()
    t0 = time.perf_counter()
    ref = dispersive_reference(params, hilbert, **solver)
    if params.g == 0:
        # the qubit decouples; the JC model reduces to the reference exactly
        jc = ref
    else:
        solver.setdefault("x0", ref.rho)
        jc = steady_state(jc_model(params, hilbert), **solver)
    pe = qubit_excited_population(jc.rho, hilbert)
    fid = state_fidelity(ref.rho, jc.rho)
    ne, no = photon_numbers(jc.rho, hilbert)
    ned, nod = photon_numbers(ref.rho, hilbert)
    return JcComparison(
        lam=params.lam,
        full_error=1.0 - fid,
        qubit_error=1.0 - math.sqrt(max(1.0 - pe, 0.0)),
        p_excited=pe,
        n_even=ne,
        n_odd=no,
        n_even_dispersive=ned,
        n_odd_dispersive=nod,
        residual_jc=jc.residual,
        residual_dispersive=ref.residual,
        iterations=jc.iterations,
        method=jc.method,
        seconds=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class ConvergenceCheck:
    n_max: int
    step: int
    values: dict
    values_next: dict
    rel_change: dict
    rtol: float

    @property
    def passed(self) -> bool:
        return all(v < self.rtol for v in self.rel_change.values())


def _rel(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def truncation_convergence(params: SystemParams, n_max: int, step: int = 2, quantities: str = "jc",
                           rtol: float = CONVERGENCE_RTOL, **solver) -> ConvergenceCheck:
    """Compare observables at ``n_max`` and ``n_max + step`` per mode.

    ``quantities="jc"`` checks ``<n_E>``, ``<n_O>`` and both fidelity errors of
    the JC comparison; ``"cavity"`` checks only the photon numbers of the
    cavity-only dispersive steady state (much cheaper).
    """
    def measure(n):
        h = HilbertConfig.square(n)
        if quantities == "cavity":
            res = steady_state(cavity_model(params, h), **solver)
            ne, no = photon_numbers(res.rho, h.without_qubit())
            return {"n_even": ne, "n_odd": no}
        c = jc_vs_dispersive_error(params, h, **solver)
        return {"n_even": c.n_even, "n_odd": c.n_odd, "full_error": c.full_error, "qubit_error": c.qubit_error}

    if quantities not in ("jc", "cavity"):
        raise DomainError(f"unknown quantity set {quantities!r}")
    a = measure(n_max)
    b = measure(n_max + step)
    rel = {k: _rel(a[k], b[k]) for k in a}
    return ConvergenceCheck(n_max, step, a, b, rel, rtol)


def smallest_converged_n_max(params: SystemParams, start: int = 8, stop: int = 60, step: int = 2,
                             rtol: float = CONVERGENCE_RTOL, **solver) -> int:
    """Smallest per-mode truncation whose cavity photon numbers pass the check."""
    prev = None
    for n in range(start, stop + step, step):
        h = HilbertConfig.square(n, qubit=False)
        res = steady_state(cavity_model(params, h), **solver)
        cur = photon_numbers(res.rho, h)
        if prev is not None and all(_rel(x, y) < rtol for x, y in zip(prev, cur)):
            return n - step
        prev = cur
    raise DomainError(f"photon numbers not converged below n_max = {stop}")


# ---------------------------------------------------------------- text dump

def dump_state(rho, path: str | Path, atol: float = 0.0) -> None:
    """Write ``dim D`` followed by ``row col re im`` lines for entries with ``|x| > atol``."""
    rho = np.asarray(rho, dtype=complex)
    D = rho.shape[0]
    rows, cols = np.nonzero(np.abs(rho) > atol)
    lines = [f"dim {D}"]
    lines += [f"{r} {c} {rho[r, c].real:.17g} {rho[r, c].imag:.17g}" for r, c in zip(rows, cols)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_state(path: str | Path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if len(head) != 2 or head[0] != "dim":
        raise DomainError(f"{path}: missing 'dim D' header")
    D = int(head[1])
    rho = np.zeros((D, D), dtype=complex)
    for ln in lines[1:]:
        if not ln.strip():
            continue
        r, c, re, im = ln.split()
        rho[int(r), int(c)] = complex(float(re), float(im))
    return rho
