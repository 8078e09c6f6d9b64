"""Dense linear algebra for small tensor-product Hilbert spaces.

Everything in this package works on plain complex ``numpy`` arrays: kets are
one-dimensional arrays, operators are square two-dimensional arrays, and
composite systems use row-major Kronecker ordering (the first factor is the
slow index). Dimensions stay tiny (products of 2 and small OAM windows), so
all routines are dense and favour clarity over scaling.

Numerical contracts used throughout:

* entrywise comparisons use ``DEFAULT_ATOL`` (1e-10),
* decomposition residuals are accepted below ``DECOMP_ATOL`` (1e-8),
* eigenvalues of nominally positive matrices may undershoot zero by at most
  ``PSD_NEG_TOL`` (1e-9) and are clipped to zero; anything lower raises
  :class:`NumericalError`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_ATOL = 1e-10
DECOMP_ATOL = 1e-8
PSD_NEG_TOL = 1e-9


class NumericalError(RuntimeError):
    """A matrix violated a numerical contract (not PSD, invalid density...)."""


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conjugate(np.asarray(m)).T


def matrices_close(a: np.ndarray, b: np.ndarray, atol: float = DEFAULT_ATOL) -> bool:
    """Entrywise closeness with absolute tolerance only."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.max(np.abs(a - b), initial=0.0) <= atol)


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more kets or operators.

    Row-major convention: for operators ``a`` (shape ra x ca) and ``b``
    (shape rb x cb) the result entry ``(i*rb + k, j*cb + l)`` equals
    ``a[i, j] * b[k, l]``. Folds left to right for more than two factors.

    Parameters
    ----------
    *ops
        One or more arrays (1-D kets or 2-D operators, mixed shapes allowed
        as long as numpy's ``kron`` broadcasting rules accept them).

    Returns
    -------
    numpy.ndarray
        The composite array, complex dtype.
    """
    if not ops:
        raise ValueError("tensor_product needs at least one factor")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def projector(ket: np.ndarray) -> np.ndarray:
    """Rank-1 projector |k><k| of a (not necessarily normalized) ket."""
    v = np.asarray(ket, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot project onto the zero vector")
    v = v / n
    return np.outer(v, v.conj())


def partial_trace(rho: np.ndarray, dim_a: int, dim_b: int, keep: str) -> np.ndarray:
    """Trace out one factor of a bipartite density matrix.

    Parameters
    ----------
    rho
        Density matrix on A (x) B, shape ``(dim_a*dim_b, dim_a*dim_b)``.
    dim_a, dim_b
        Factor dimensions, both positive.
    keep
        ``"A"`` keeps the first factor, ``"B"`` the second.

    Returns
    -------
    numpy.ndarray
        Reduced density matrix of the kept factor. Trace is preserved.
    """
    if keep not in ("A", "B"):
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    if dim_a < 1 or dim_b < 1:
        raise ValueError(f"factor dimensions must be positive, got ({dim_a}, {dim_b})")
    rho = np.asarray(rho, dtype=complex)
    expected = dim_a * dim_b
    if rho.shape != (expected, expected):
        raise ValueError(
            f"density matrix must be {expected}x{expected} for factor dims "
            f"({dim_a}, {dim_b}), got {rho.shape[0]}x{rho.shape[1]}"
            if rho.ndim == 2
            else f"density matrix must be {expected}x{expected}, got ndim={rho.ndim}"
        )
    four = rho.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.einsum("ijkj->ik", four)
    return np.einsum("ijil->jl", four)


@dataclass(frozen=True, eq=False)
class HermEigen:
    """Eigendecomposition of a Hermitian matrix.

    Attributes
    ----------
    eigenvalues
        Real eigenvalues sorted descending (ties keep ascending-eigh order).
    eigenvectors
        Columns are the matching orthonormal eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """V diag(w) V^dagger, for residual checks."""
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def eigen_hermitian(m: np.ndarray, herm_atol: float = DECOMP_ATOL) -> HermEigen:
    """Eigendecompose a Hermitian matrix with descending eigenvalue order.

    The input is symmetrized as ``(m + m^dagger)/2`` before decomposition;
    a Hermiticity deviation beyond ``herm_atol`` is rejected.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    dev = float(np.max(np.abs(m - dagger(m)), initial=0.0))
    if dev > herm_atol:
        raise ValueError(f"matrix is not Hermitian: max deviation {dev:.3e} > {herm_atol:.1e}")
    herm = (m + dagger(m)) / 2.0
    w, v = np.linalg.eigh(herm)
    # eigh returns ascending order; stable flip keeps tie order deterministic
    order = np.arange(w.size)[::-1]
    return HermEigen(eigenvalues=w[order], eigenvectors=v[:, order])


def psd_sqrt(m: np.ndarray, neg_tol: float = PSD_NEG_TOL) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues in ``[-neg_tol, 0)`` are treated as numerical noise and
    clipped to zero; an eigenvalue below ``-neg_tol`` raises
    :class:`NumericalError`.
    """
    eig = eigen_hermitian(m)
    w = eig.eigenvalues
    if w.size and float(w.min()) < -neg_tol:
        raise NumericalError(
            f"matrix is not positive semidefinite: min eigenvalue {float(w.min()):.3e}"
        )
    w = np.clip(w, 0.0, None)
    v = eig.eigenvectors
    return (v * np.sqrt(w)) @ dagger(v)


@dataclass(frozen=True)
class DensityReport:
    """Deviations of a candidate density matrix from the exact contract."""

    hermiticity_dev: float
    trace_dev: float
    min_eigenvalue: float
    tol: float
    passed: bool


def validate_density(rho: np.ndarray, tol: float = DECOMP_ATOL) -> DensityReport:
    """Check Hermiticity, unit trace and positivity of a density matrix.

    Passes when the Hermiticity deviation and ``|tr - 1|`` are below ``tol``
    and the minimum eigenvalue is above ``-tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    herm_dev = float(np.max(np.abs(rho - dagger(rho)), initial=0.0))
    trace_dev = float(abs(np.trace(rho) - 1.0))
    w = np.linalg.eigvalsh((rho + dagger(rho)) / 2.0)
    min_eig = float(w.min()) if w.size else 0.0
    passed = herm_dev <= tol and trace_dev <= tol and min_eig >= -tol
    return DensityReport(
        hermiticity_dev=herm_dev,
        trace_dev=trace_dev,
        min_eigenvalue=min_eig,
        tol=tol,
        passed=passed,
    )
