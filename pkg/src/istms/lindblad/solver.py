"""Liouvillian construction and steady-state solvers.

Three strategies are available:

``direct``
    Sparse LU of the vectorised Liouvillian with one row replaced by the trace
    constraint. Exact but memory-hungry; used for small problems and as an
    oracle in tests.
``krylov``
    Matrix-free BiCGSTAB on ``L(P^-1 y) + u Tr(P^-1 y) = u`` where ``P`` is the
    no-jump (Sylvester) part of ``L`` for a Hamiltonian that is block diagonal
    in a cheap basis, and ``u`` is the vacuum projector.
``jump-chain``
    Fixed-point iteration of the embedded jump chain
    ``sigma <- (sigma + J(-A^-1 sigma)) / 2`` with an exact no-jump inverse.
    Slow but robust; it never needs a linear solve on ``D^2`` unknowns.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from ..errors import DimensionError, DomainError, NoConvergenceError, NonUniqueSteadyStateError
from ._kernels import BlockSandwichKernel, LindbladKernel

log = logging.getLogger(__name__)

# vectorised rows (D^2) above which the direct solver is not attempted by "auto"
DIRECT_MAX_ROWS = 10_000
# largest dimension for which the jump-chain fallback builds dense eigenbases
JUMP_CHAIN_MAX_DIM = 4_000

HERMITIAN_TOL = 1e-9
TRACE_TOL = 1e-9
NEGATIVITY_TOL = 1e-8
RESIDUAL_TOL = 1e-8
# smallest |U_ii| / max |U_ii| accepted by the direct solver
PIVOT_RTOL = 1e-12


# ---------------------------------------------------------------- states

def validate_density_matrix(rho, tol: float = HERMITIAN_TOL, neg_tol: float = NEGATIVITY_TOL) -> np.ndarray:
    """Return ``rho`` as an ndarray, raising if it is not a valid state."""
    rho = rho.toarray() if sp.issparse(rho) else np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise DomainError(f"trace is {tr}, expected 1")
    herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm > tol:
        raise DomainError(f"density matrix is not Hermitian (max deviation {herm:.3g})")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals[0] < -neg_tol:
        raise DomainError(f"density matrix has eigenvalue {evals[0]:.3g} < -{neg_tol:g}")
    return rho


def physical_state(rho, neg_tol: float = NEGATIVITY_TOL) -> np.ndarray:
    """Hermitize, normalize and clip tiny negative eigenvalues of ``rho``.

    Eigenvalues in ``[-neg_tol, 0)`` are set to zero; anything more negative
    means the solver output is not a state and raises.
    """
    rho = np.asarray(rho, dtype=complex)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if not tr > 0:
        raise NoConvergenceError(f"steady-state candidate has non-positive trace {tr}")
    rho = rho / tr
    evals, evecs = np.linalg.eigh(rho)
    if evals[0] < -neg_tol:
        raise NoConvergenceError(f"steady-state candidate has eigenvalue {evals[0]:.3g}")
    if evals[0] < 0:
        evals = np.clip(evals, 0.0, None)
        rho = (evecs * evals) @ evecs.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
    return rho


@dataclass
class SteadyStateResult:
    rho: np.ndarray
    residual: float
    method: str
    iterations: int
    seconds: float = 0.0
    unique: bool = True

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def expect(self, op) -> float:
        return float(np.real((op @ self.rho).trace() if sp.issparse(op) else np.trace(op @ self.rho)))


# ---------------------------------------------------------------- superoperators

def _as_csr(op, dim=None):
    op = sp.csr_matrix(op, dtype=complex)
    if op.shape[0] != op.shape[1]:
        raise DimensionError(f"operator is not square: {op.shape}")
    if dim is not None and op.shape[0] != dim:
        raise DimensionError(f"operator dimension {op.shape[0]} != {dim}")
    return op


def liouvillian(H, c_ops) -> sp.csr_matrix:
    """``D^2 x D^2`` generator of ``-i[H, rho] + sum_k r_k D[L_k] rho``.

    Column-stacking vectorisation, ``vec(A X B) = (B^T kron A) vec(X)``.
    ``c_ops`` is a list of ``(rate, operator)`` pairs.
    """
    H = _as_csr(H)
    D = H.shape[0]
    eye = sp.identity(D, dtype=complex, format="csr")
    L = -1j * (sp.kron(eye, H) - sp.kron(H.T, eye))
    for rate, c in c_ops:
        if rate < 0:
            raise DomainError(f"decay rate must be non-negative, got {rate}")
        c = _as_csr(c, D)
        cdc = (c.conj().T @ c).tocsr()
        L = L + rate * (sp.kron(c.conj(), c) - 0.5 * sp.kron(eye, cdc) - 0.5 * sp.kron(cdc.T, eye))
    return sp.csr_matrix(L)


def trace_row(D: int) -> sp.csr_matrix:
    """Row vector ``vec(I)^T`` so that ``trace_row @ vec(rho) = Tr rho``."""
    idx = np.arange(D) * (D + 1)
    return sp.csr_matrix((np.ones(D, dtype=complex), (np.zeros(D, int), idx)), shape=(1, D * D))


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, D: int) -> np.ndarray:
    return np.asarray(v).reshape((D, D), order="F")


@dataclass
class LindbladModel:
    """Hamiltonian, decay channels and an optional preconditioner Hamiltonian.

    ``h_precond`` should differ from ``H`` only by terms that couple otherwise
    disconnected blocks; the Krylov preconditioner inverts the no-jump part of
    ``h_precond`` exactly.
    """

    H: sp.csr_matrix
    c_ops: list = field(default_factory=list)
    h_precond: sp.csr_matrix | None = None

    def __post_init__(self):
        self.H = _as_csr(self.H)
        D = self.H.shape[0]
        self.c_ops = [(float(r), _as_csr(c, D)) for r, c in self.c_ops]
        if self.h_precond is not None:
            self.h_precond = _as_csr(self.h_precond, D)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def damping(self):
        D = self.dim
        K = sp.csr_matrix((D, D), dtype=complex)
        for r, c in self.c_ops:
            K = K + 0.5 * r * (c.conj().T @ c)
        return K.tocsr()

    def heff(self, H=None):
        H = self.H if H is None else H
        return sp.csr_matrix(H - 1j * self.damping())

    def jump_ops(self):
        return [np.sqrt(r) * c for r, c in self.c_ops if r > 0]

    def liouvillian(self):
        return liouvillian(self.H, self.c_ops)

    def kernel(self, backend=None) -> LindbladKernel:
        return LindbladKernel(self.heff(), self.jump_ops(), backend=backend)

    def apply(self, rho, backend=None) -> np.ndarray:
        return self.kernel(backend)(rho)

    def residual(self, rho, kernel=None) -> float:
        kernel = kernel or self.kernel()
        return float(np.linalg.norm(kernel(rho)))


# ---------------------------------------------------------------- no-jump inverse

class NoJumpInverse:
    """Inverse of ``A(X) = -i(K X - X K^+)`` for non-Hermitian ``K``.

    ``K`` is split into connected components (blocks) and each block is
    diagonalised densely, so ``A^-1 X = V [(W X W^+) / den] V^+`` with
    ``W = V^-1`` and ``den_ij = -i(w_i - conj(w_j))``. Entries with
    ``|den| < shift`` are replaced by ``-shift`` (regularised preconditioner);
    ``shift = 0`` keeps the inverse exact.
    """

    def __init__(self, K, shift: float = 0.0, backend=None):
        K = _as_csr(K)
        D = K.shape[0]
        graph = (abs(K) + sp.identity(D, format="csr")).tocsr()
        ncomp, labels = csgraph.connected_components(graph, directed=False)
        order = np.argsort(labels, kind="stable")
        sizes = np.bincount(labels, minlength=ncomp)
        starts = np.concatenate([[0], np.cumsum(sizes)])
        w = np.zeros(D, dtype=complex)
        blocks_v, blocks_w = [], []
        worst = 1.0
        for c in range(ncomp):
            idx = order[starts[c]:starts[c + 1]]
            ww, vv = np.linalg.eig(K[idx][:, idx].toarray())
            vi = np.linalg.inv(vv)
            worst = max(worst, np.linalg.norm(vv, 2) * np.linalg.norm(vi, 2))
            w[starts[c]:starts[c + 1]] = ww
            blocks_v.append(vv)
            blocks_w.append(vi)
        # w is in the permuted (block) order, as is den
        den = -1j * (w[:, None] - w.conj()[None, :])
        self.n_singular = int(np.count_nonzero(np.abs(den) < max(shift, 1e-300)))
        if shift > 0:
            den = np.where(np.abs(den) < shift, -shift, den)
        elif self.n_singular:
            raise NonUniqueSteadyStateError("no-jump generator is singular (dark states present)")
        self.blocks = ncomp
        self.condition = float(worst)
        self.eigenvalues = w
        self._inv = 1.0 / den
        self._fwd = den
        self._sandwich = BlockSandwichKernel(order, blocks_v, blocks_w, backend=backend)

    def solve(self, X):
        """``A^-1 X``."""
        return self._sandwich(self._inv, X)

    def apply(self, X):
        """``A X`` (through the same factorisation)."""
        return self._sandwich(self._fwd, X)


# ---------------------------------------------------------------- solvers

def _seed(D, seed_index=0):
    u = np.zeros((D, D), dtype=complex)
    u[seed_index, seed_index] = 1.0
    return u


def _solve_direct(model_or_L):
    L = model_or_L.liouvillian() if isinstance(model_or_L, LindbladModel) else sp.csr_matrix(model_or_L)
    n = L.shape[0]
    D = int(round(np.sqrt(n)))
    if D * D != n:
        raise DimensionError(f"superoperator size {n} is not a square")
    # replace the equation for rho_00 by the trace constraint
    A = sp.vstack([trace_row(D), L[1:]]).tocsc()
    b = np.zeros(n, dtype=complex)
    b[0] = 1.0
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # SuperLU reports exactly singular factors
        raise NonUniqueSteadyStateError(f"Liouvillian null space is not one-dimensional ({exc})") from exc
    # a second stationary state shows up as a pivot at rounding level
    piv = np.abs(lu.U.diagonal())
    if piv.min() < PIVOT_RTOL * piv.max():
        raise NonUniqueSteadyStateError(
            f"Liouvillian null space is not one-dimensional (pivot ratio {piv.min() / piv.max():.3g})")
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise NonUniqueSteadyStateError("Liouvillian null space is not one-dimensional")
    rho = unvec(x, D)
    res = float(np.linalg.norm(L @ vec(rho)))
    return rho, res, 1


def _solve_krylov(model: LindbladModel, rtol, maxiter, x0, backend):
    D = model.dim
    rates = [r for r, _ in model.c_ops if r > 0]
    shift = 1e-3 * (min(rates) if rates else 1.0)
    hp = model.h_precond if model.h_precond is not None else model.H
    prec = NoJumpInverse(model.heff(hp), shift=shift, backend=backend)
    L = model.kernel(backend)
    u = _seed(D)
    count = [0]

    def matvec(v):
        count[0] += 1
        x = prec.solve(v.reshape(D, D))
        out = L(x)
        out += u * np.trace(x)
        return out.ravel()

    op = spla.LinearOperator((D * D, D * D), matvec=matvec, dtype=complex)
    y0 = None if x0 is None else prec.apply(np.asarray(x0, dtype=complex)).ravel()
    y, info = spla.bicgstab(op, u.ravel(), x0=y0, rtol=rtol, atol=0.0, maxiter=maxiter)
    tag = "krylov"
    if info != 0:
        log.info("bicgstab stopped with info=%s after %d matvecs; retrying with gmres", info, count[0])
        y, info = spla.gmres(op, u.ravel(), x0=y, rtol=rtol, atol=0.0, restart=60, maxiter=max(maxiter // 60, 1))
        tag = "krylov-gmres"
    if info != 0 or not np.all(np.isfinite(y)):
        raise NoConvergenceError(f"Krylov steady-state solve did not converge (info={info})")
    rho = prec.solve(y.reshape(D, D))
    return rho, L, count[0], tag


def _solve_jump_chain(model: LindbladModel, tol, maxiter, x0, backend):
    D = model.dim
    if D > JUMP_CHAIN_MAX_DIM:
        raise NoConvergenceError(f"dimension {D} too large for the jump-chain fallback")
    try:
        A = NoJumpInverse(model.heff(), shift=0.0, backend=backend)
    except NonUniqueSteadyStateError as exc:
        # a dark state of the no-jump evolution is never left; the chain is undefined
        raise NoConvergenceError(f"jump-chain iteration needs an invertible no-jump generator ({exc})") from exc
    jumps = LindbladKernel(sp.csr_matrix((D, D), dtype=complex), model.jump_ops(), backend=backend)
    L = model.kernel(backend)
    rho = _seed(D) if x0 is None else np.asarray(x0, dtype=complex)
    sigma = jumps(rho)
    if not abs(np.trace(sigma)) > 1e-300:
        sigma = np.eye(D, dtype=complex) / D
    sigma /= np.trace(sigma)
    for it in range(1, maxiter + 1):
        rho = -A.solve(sigma)
        rho /= np.trace(rho)
        res = float(np.linalg.norm(L(rho)))
        if res < tol:
            return rho, L, it
        nxt = jumps(rho)
        nxt /= np.trace(nxt)
        sigma = 0.5 * (sigma + nxt)
    raise NoConvergenceError(f"jump-chain iteration did not reach residual {tol:g} in {maxiter} steps")


def steady_state(model, method: str = "auto", tol: float = 1e-10, x0=None, maxiter: int = 5000,
                 backend: str | None = None) -> SteadyStateResult:
    """Stationary state of a Lindblad model.

    Parameters
    ----------
    model : LindbladModel or sparse matrix
        A model, or an already vectorised Liouvillian (direct method only).
    method : {"auto", "direct", "krylov", "jump-chain"}
        ``auto`` uses ``direct`` for at most ``DIRECT_MAX_ROWS`` vectorised
        rows and ``krylov`` otherwise, falling back to ``jump-chain``.
    tol
        Target for ``||L rho||`` (Frobenius). Krylov solves run at a relative
        tolerance ``tol / 10``.
    x0
        Optional initial guess (a density matrix).

    Notes
    -----
    If the Liouvillian has several stationary states (e.g. a decoupled qubit)
    the Krylov solver returns the one reached from the vacuum projector in
    basis state 0 and marks the result ``unique=False``.
    """
    t_start = time.perf_counter()
    if not isinstance(model, LindbladModel):
        if method not in ("auto", "direct"):
            raise DomainError("a bare Liouvillian can only be solved with the direct method")
        rho, res, it = _solve_direct(model)
        rho = physical_state(rho)
        L = sp.csr_matrix(model)
        res = float(np.linalg.norm(L @ vec(rho)))
        return _finish(rho, res, "direct", it, t_start, tol)

    if method not in ("auto", "direct", "krylov", "jump-chain"):
        raise DomainError(f"unknown steady-state method {method!r}")
    D = model.dim
    unique = True
    if method == "direct" or (method == "auto" and D * D <= DIRECT_MAX_ROWS):
        try:
            rho, res, it = _solve_direct(model)
            if res < RESIDUAL_TOL or method == "direct":
                rho = physical_state(rho)
                return _finish(rho, model.residual(rho), "direct", it, t_start, tol)
        except NonUniqueSteadyStateError:
            if method == "direct":
                raise
            unique = False
            log.info("direct solve found a degenerate null space; using the seeded Krylov solve")
    if method == "jump-chain":
        rho, L, it = _solve_jump_chain(model, tol, 100 * maxiter, x0, backend)
        rho = physical_state(rho)
        return _finish(rho, float(np.linalg.norm(L(rho))), "jump-chain", it, t_start, tol)
    try:
        rho, L, it, tag = _solve_krylov(model, tol / 10.0, maxiter, x0, backend)
        rho = physical_state(rho)
        res = float(np.linalg.norm(L(rho)))
        if res >= RESIDUAL_TOL:
            raise NoConvergenceError(f"Krylov residual {res:.3g} above {RESIDUAL_TOL:g}")
    except NoConvergenceError:
        if method == "krylov":
            raise
        log.info("Krylov solve failed; falling back to the jump-chain iteration")
        rho, L, it = _solve_jump_chain(model, tol, 100 * maxiter, x0, backend)
        rho = physical_state(rho)
        res = float(np.linalg.norm(L(rho)))
        tag = "jump-chain"
    out = _finish(rho, res, tag, it, t_start, tol)
    out.unique = unique
    return out


def _finish(rho, res, method, it, t_start, tol):
    if not res < max(RESIDUAL_TOL, tol):
        raise NoConvergenceError(f"steady-state residual {res:.3g} above {max(RESIDUAL_TOL, tol):g} ({method})")
    return SteadyStateResult(rho=rho, residual=res, method=method, iterations=it,
                             seconds=time.perf_counter() - t_start)
