"""Matrix-free Lindblad kernels.

Two interchangeable backends compute the same products on dense ``D x D``
complex matrices, with CSR operators (Lindblad apply) or block-diagonal dense
operators (no-jump preconditioner):

* ``numba``: fused ``@njit`` loops (default when numba imports),
* ``numpy``: scipy.sparse and per-block ``@`` products.

Set ``ISTMS_DISABLE_NUMBA=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

_DISABLED = os.environ.get("ISTMS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - depends on environment
    njit = None

BACKEND = "numba" if njit is not None else "numpy"

JIT_OPTIONS = {"nogil": True, "cache": True}


def _csr_parts(A):
    A = sp.csr_matrix(A, dtype=complex)
    A.sort_indices()
    return A.data, A.indices.astype(np.int64), A.indptr.astype(np.int64)


class CsrOp:
    """A CSR operator prepared once for repeated use by either backend."""

    __slots__ = ("matrix", "data", "indices", "indptr")

    def __init__(self, A):
        self.matrix = sp.csr_matrix(A, dtype=complex)
        self.data, self.indices, self.indptr = _csr_parts(self.matrix)


# ---------------------------------------------------------------- numpy path

def _left_np(A: CsrOp, X, out, alpha):
    out += alpha * (A.matrix @ X)


def _right_dag_np(X, A: CsrOp, out, alpha):
    out += alpha * (A.matrix @ X.conj().T).conj().T


def _lindblad_np(heff: CsrOp, jumps, X):
    out = -1j * (heff.matrix @ X)
    out += 1j * (heff.matrix @ X.conj().T).conj().T
    for c in jumps:
        cx = c.matrix @ X
        out += (c.matrix @ cx.conj().T).conj().T
    return out


def _block_left_np(flat, foff, bounds, X):
    out = np.empty_like(X)
    for b in range(len(bounds) - 1):
        lo, hi = bounds[b], bounds[b + 1]
        n = hi - lo
        out[lo:hi] = flat[foff[b]:foff[b] + n * n].reshape(n, n) @ X[lo:hi]
    return out


# ---------------------------------------------------------------- numba path

if njit is not None:

    @njit(**JIT_OPTIONS)
    def _left_nb(data, indices, indptr, X, out, alpha):
        n = indptr.shape[0] - 1
        m = X.shape[1]
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                v = alpha * data[p]
                j = indices[p]
                for k in range(m):
                    out[i, k] += v * X[j, k]

    @njit(**JIT_OPTIONS)
    def _right_dag_nb(X, data, indices, indptr, out, alpha):
        rows = X.shape[0]
        n = indptr.shape[0] - 1
        for i in range(rows):
            for j in range(n):
                acc = 0j
                for p in range(indptr[j], indptr[j + 1]):
                    acc += X[i, indices[p]] * np.conj(data[p])
                out[i, j] += alpha * acc

    @njit(**JIT_OPTIONS)
    def _lindblad_nb(hd, hi, hp, jd, ji, jp, X):
        # jumps are stacked: jp has one indptr row per operator, ji/jd are padded
        out = np.zeros_like(X)
        _left_nb(hd, hi, hp, X, out, -1j)
        _right_dag_nb(X, hd, hi, hp, out, 1j)
        tmp = np.empty_like(X)
        for c in range(jp.shape[0]):
            tmp[:, :] = 0
            _left_nb(jd[c], ji[c], jp[c], X, tmp, 1.0 + 0j)
            _right_dag_nb(tmp, jd[c], ji[c], jp[c], out, 1.0 + 0j)
        return out

    @njit(**JIT_OPTIONS)
    def _block_left_nb(flat, foff, bounds, X):
        out = np.empty_like(X)
        for b in range(bounds.shape[0] - 1):
            lo = bounds[b]
            hi = bounds[b + 1]
            n = hi - lo
            blk = flat[foff[b]:foff[b] + n * n].reshape((n, n))
            out[lo:hi] = np.dot(blk, np.ascontiguousarray(X[lo:hi]))
        return out

    @njit(**JIT_OPTIONS)
    def _tile_sandwich_nb(flat_v, flat_vh, flat_w, flat_wh, foff, bounds, perm, factor, X):
        # every (I, J) tile of the result only needs the (I, J) tile of X
        D = X.shape[0]
        nb = bounds.shape[0] - 1
        out = np.empty_like(X)
        for I in range(nb):
            lo_i = bounds[I]
            ni = bounds[I + 1] - lo_i
            Wi = flat_w[foff[I]:foff[I] + ni * ni].reshape((ni, ni))
            Vi = flat_v[foff[I]:foff[I] + ni * ni].reshape((ni, ni))
            rows = np.empty((ni, D), dtype=X.dtype)
            for a in range(ni):
                rows[a, :] = X[perm[lo_i + a], :]
            T = np.dot(Wi, rows)
            for J in range(nb):
                lo_j = bounds[J]
                nj = bounds[J + 1] - lo_j
                WjH = flat_wh[foff[J]:foff[J] + nj * nj].reshape((nj, nj))
                VjH = flat_vh[foff[J]:foff[J] + nj * nj].reshape((nj, nj))
                tile = np.empty((ni, nj), dtype=X.dtype)
                for a in range(ni):
                    for b in range(nj):
                        tile[a, b] = T[a, perm[lo_j + b]]
                Y = np.dot(tile, WjH)
                for a in range(ni):
                    for b in range(nj):
                        Y[a, b] *= factor[lo_i + a, lo_j + b]
                Z = np.dot(np.dot(Vi, Y), VjH)
                for a in range(ni):
                    r = perm[lo_i + a]
                    for b in range(nj):
                        out[r, perm[lo_j + b]] = Z[a, b]
        return out


def _stack(jumps):
    nnz = max((len(c.data) for c in jumps), default=0)
    m = len(jumps)
    n = len(jumps[0].indptr) if jumps else 1
    jd = np.zeros((m, max(nnz, 1)), dtype=complex)
    ji = np.zeros((m, max(nnz, 1)), dtype=np.int64)
    jp = np.zeros((m, n), dtype=np.int64)
    for k, c in enumerate(jumps):
        jd[k, : len(c.data)] = c.data
        ji[k, : len(c.indices)] = c.indices
        jp[k] = c.indptr
    return jd, ji, jp


class LindbladKernel:
    """``X -> -i(Heff X - X Heff^+) + sum_c c X c^+`` for a fixed model."""

    def __init__(self, heff, jumps, backend: str | None = None):
        self.backend = backend or BACKEND
        if self.backend == "numba" and njit is None:
            raise RuntimeError("numba backend requested but numba is unavailable")
        self.heff = CsrOp(heff)
        self.jumps = [CsrOp(c) for c in jumps]
        self._stacked = _stack(self.jumps)

    def __call__(self, X):
        X = np.ascontiguousarray(X, dtype=complex)
        if self.backend == "numba":
            h = self.heff
            return _lindblad_nb(h.data, h.indices, h.indptr, *self._stacked, X)
        return _lindblad_np(self.heff, self.jumps, X)


class BlockSandwichKernel:
    """``X -> V [(W X W^+) * factor] V^+`` for block-diagonal ``V`` and ``W``.

    ``perm`` lists basis indices block by block; ``blocks_v``/``blocks_w`` are
    the dense diagonal blocks in that order. ``factor`` is given in the
    permuted basis. Right products use ``X B^+ = (B X^+)^+``, so every product
    is a dense per-block left multiplication.
    """

    def __init__(self, perm, blocks_v, blocks_w, backend: str | None = None):
        self.backend = backend or BACKEND
        if self.backend == "numba" and njit is None:
            raise RuntimeError("numba backend requested but numba is unavailable")
        self.perm = np.asarray(perm, dtype=np.int64)
        self.iperm = np.argsort(self.perm)
        sizes = np.array([b.shape[0] for b in blocks_v], dtype=np.int64)
        self.bounds = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.foff = np.concatenate([[0], np.cumsum(sizes**2)]).astype(np.int64)
        self.flat_v = np.concatenate([np.ascontiguousarray(b, dtype=complex).ravel() for b in blocks_v])
        self.flat_w = np.concatenate([np.ascontiguousarray(b, dtype=complex).ravel() for b in blocks_w])
        self.flat_vh = np.concatenate([np.ascontiguousarray(np.conj(b).T, dtype=complex).ravel() for b in blocks_v])
        self.flat_wh = np.concatenate([np.ascontiguousarray(np.conj(b).T, dtype=complex).ravel() for b in blocks_w])
        self._left = _block_left_nb if self.backend == "numba" else _block_left_np

    def _half(self, flat, X):
        # B X B^+
        t = self._left(flat, self.foff, self.bounds, X)
        t = np.ascontiguousarray(t.conj().T)
        return self._left(flat, self.foff, self.bounds, t).conj().T

    def __call__(self, factor, X):
        X = np.asarray(X, dtype=complex)
        if self.backend == "numba":
            return _tile_sandwich_nb(self.flat_v, self.flat_vh, self.flat_w, self.flat_wh, self.foff,
                                     self.bounds, self.perm, np.ascontiguousarray(factor, dtype=complex),
                                     np.ascontiguousarray(X))
        xp = np.ascontiguousarray(X[np.ix_(self.perm, self.perm)])
        y = np.ascontiguousarray(self._half(self.flat_w, xp) * factor)
        z = self._half(self.flat_v, y)
        return np.ascontiguousarray(z[np.ix_(self.iperm, self.iperm)])
