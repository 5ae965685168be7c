"""Dense complex Hermitian kernel: EVD, PSD tests, pseudo-inverse, Schur test.

Vectors are plain complex ``numpy`` arrays. Matrices that must be Hermitian
go through :class:`HermitianMatrix`, which validates and symmetrizes once so
that downstream PSD checks never see round-off asymmetry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-9
DEFAULT_ASYMMETRY_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


class EigenSolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Read-only Hermitian matrix.

    Construction fails when the relative asymmetry ``||M - M^H||_F / ||M||_F``
    exceeds ``asymmetry_tol``; smaller asymmetry is removed by ``(M + M^H)/2``.
    """

    data: np.ndarray

    def __init__(self, data, asymmetry_tol: float = DEFAULT_ASYMMETRY_TOL):
        m = np.array(data, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise NotHermitianError(f"expected a non-empty square matrix, got shape {m.shape}")
        scale = np.linalg.norm(m)
        asym = np.linalg.norm(m - m.conj().T)
        if asym > asymmetry_tol * max(scale, 1.0):
            raise NotHermitianError(
                f"matrix is not Hermitian: relative asymmetry {asym / max(scale, 1.0):.3e}"
            )
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "data", m)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def outer(cls, v, scale: float = 1.0) -> "HermitianMatrix":
        """``scale * v v^H``."""
        v = as_vector(v)
        return cls(scale * np.outer(v, v.conj()))

    def __add__(self, other):
        return HermitianMatrix(self.data + _data(other))

    def __sub__(self, other):
        return HermitianMatrix(self.data - _data(other))

    def __mul__(self, c: float):
        return HermitianMatrix(float(c) * self.data)

    __rmul__ = __mul__

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def quad(self, v) -> float:
        """Real quadratic form ``v^H M v``."""
        v = as_vector(v)
        return float(np.vdot(v, self.data @ v).real)


def _data(m) -> np.ndarray:
    return m.data if isinstance(m, HermitianMatrix) else np.asarray(m, dtype=complex)


def as_hermitian(m) -> HermitianMatrix:
    return m if isinstance(m, HermitianMatrix) else HermitianMatrix(m)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending, eigenvectors as columns of ``vectors``."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def rank(self, rank_tol: float = DEFAULT_RANK_TOL) -> int:
        return int(np.sum(np.abs(self.values) >= _zero_threshold(self.values, rank_tol)))


def _zero_threshold(values: np.ndarray, rank_tol: float) -> float:
    return rank_tol * max(float(np.max(np.abs(values), initial=0.0)), 1.0)


def evd(m, check_tol: float = 1e-10) -> EigenDecomposition:
    """Eigendecomposition ``m = U diag(q) U^H`` with ``q`` sorted descending.

    Raises :class:`EigenSolverError` if LAPACK fails or the reconstruction
    misses ``m`` by more than ``check_tol`` relative Frobenius error.
    """
    a = _data(as_hermitian(m))
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}", float("nan")) from exc
    order = np.argsort(w)[::-1]
    dec = EigenDecomposition(values=w[order], vectors=u[:, order])
    residual = np.linalg.norm(dec.reconstruct() - a) / max(np.linalg.norm(a), 1.0)
    if residual > check_tol:
        raise EigenSolverError("eigendecomposition failed reconstruction check", residual)
    return dec


def pseudo_inverse(m, rank_tol: float = DEFAULT_RANK_TOL) -> HermitianMatrix:
    """Moore-Penrose inverse via the EVD, dropping eigenvalues below
    ``rank_tol * max(|lambda|_max, 1)``."""
    dec = evd(m)
    q = dec.values
    keep = np.abs(q) >= _zero_threshold(q, rank_tol)
    inv = np.zeros_like(q)
    inv[keep] = 1.0 / q[keep]
    return HermitianMatrix((dec.vectors * inv) @ dec.vectors.conj().T)


@dataclass(frozen=True)
class PsdReport:
    min_eigenvalue: float
    feasible: bool


def min_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(_data(as_hermitian(m)))[0])


def is_psd(m, tol: float = 0.0) -> PsdReport:
    lam = min_eigenvalue(m)
    return PsdReport(min_eigenvalue=lam, feasible=lam >= -tol)


def block_matrix(a, b, c: float) -> HermitianMatrix:
    """Assemble ``[[a, b], [b^H, c]]`` with vector ``b`` and real scalar ``c``."""
    a = _data(as_hermitian(a))
    b = as_vector(b)
    n = a.shape[0]
    m = np.empty((n + 1, n + 1), dtype=complex)
    m[:n, :n] = a
    m[:n, n] = b
    m[n, :n] = b.conj()
    m[n, n] = c
    return HermitianMatrix(m)


def generalized_schur_feasible(a, b, c: float, rank_tol: float = DEFAULT_RANK_TOL,
                               tol: float = 1e-9) -> bool:
    """Block-PSD test for ``[[a, b], [b^H, c]]`` given ``a >= 0``.

    True iff ``c - b^H a^+ b >= -tol`` (scaled by the block magnitude) and
    ``b`` lies in the range of ``a`` up to ``tol * ||b||``.
    """
    a = as_hermitian(a)
    b = as_vector(b)
    a_pinv = pseudo_inverse(a, rank_tol).data
    nb = float(np.linalg.norm(b))
    off_range = np.linalg.norm(b - a.data @ (a_pinv @ b))
    if off_range > tol * nb:
        return False
    complement = c - float(np.vdot(b, a_pinv @ b).real)
    scale = max(abs(c), nb, float(np.linalg.norm(a.data, 2)), 1.0)
    return complement >= -tol * scale
