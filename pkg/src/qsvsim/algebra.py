"""Dense complex linear algebra on small matrices.

Matrices are plain ``numpy`` arrays of dtype complex128. The Hermitian
eigensolver is a cyclic Jacobi iteration provided by :mod:`qsvsim.kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFinite, NotHermitian, NotPSD, NotSquare, NoConvergence, ShapeMismatch
from .kernels import jacobi_eigh

HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-8
JACOBI_TOL = 1e-12


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix has NaN or infinite entries")
    return a


def _hermitian(m, tol=HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NotSquare(f"matrix of shape {a.shape} is not square")
    dev = np.linalg.norm(a - a.conj().T)
    if dev > tol:
        raise NotHermitian(f"||M - M^H||_F = {dev:.3e} exceeds {tol:.1e}")
    return (a + a.conj().T) / 2


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order and the unitary whose columns are eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(m, *, tol: float = JACOBI_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises NotSquare or NotHermitian when ``m`` fails the input checks and
    NoConvergence if the Jacobi sweeps stall.
    """
    a = _hermitian(m)
    w, v, sweeps = jacobi_eigh(a, tol)
    if sweeps < 0:
        raise NoConvergence("Jacobi iteration did not converge")
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    w.flags.writeable = False
    v.flags.writeable = False
    return SpectralDecomposition(w, v)


def eigvalsh(m, *, tol: float = JACOBI_TOL) -> np.ndarray:
    """Eigenvalues only, descending."""
    a = _hermitian(m)
    w, _, sweeps = jacobi_eigh(a, tol, 100, False)
    if sweeps < 0:
        raise NoConvergence("Jacobi iteration did not converge")
    return np.sort(w)[::-1]


def psd_sqrt(m) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues in ``[-1e-8, 0)`` are treated as round-off and clamped to zero;
    anything more negative raises NotPSD.
    """
    dec = hermitian_eig(m)
    w = dec.eigenvalues
    if w.size and w.min() < -CLAMP_TOL:
        raise NotPSD(f"minimum eigenvalue {w.min():.3e} < {-CLAMP_TOL:.0e}")
    root = np.sqrt(np.clip(w, 0.0, None))
    v = dec.eigenvectors
    r = (v * root) @ v.conj().T
    return (r + r.conj().T) / 2


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(A⊗B)[i*rB + k, j*cB + l] = A[i, j] * B[k, l]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def frobenius_inner(a, b) -> complex:
    """``Tr(A^H B)``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    return complex(np.vdot(a, b))


def trace_norm(m) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.sum(np.abs(eigvalsh(a))))


def positive_projector(m, *, cutoff: float = 1e-12) -> np.ndarray:
    """Projector onto the eigenspace of eigenvalues strictly above ``cutoff``."""
    dec = hermitian_eig(m)
    v = dec.eigenvectors[:, dec.eigenvalues > cutoff]
    return v @ v.conj().T
