"""Shared independent oracles for the test suite.

These deliberately avoid the package's own linear algebra where the point is
to cross-check it: Kronecker products and partial traces are written as
explicit index loops, reference states are assembled from hand-written
amplitude vectors.
"""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)


def kron_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Four-index brute-force Kronecker product."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def partial_trace_oracle(rho: np.ndarray, dim_a: int, dim_b: int, keep: str) -> np.ndarray:
    """Double-index summation definition of the partial trace."""
    rho = np.asarray(rho, dtype=complex)
    if keep == "A":
        out = np.zeros((dim_a, dim_a), dtype=complex)
        for i in range(dim_a):
            for k in range(dim_a):
                for j in range(dim_b):
                    out[i, k] += rho[i * dim_b + j, k * dim_b + j]
        return out
    out = np.zeros((dim_b, dim_b), dtype=complex)
    for j in range(dim_b):
        for l in range(dim_b):
            for i in range(dim_a):
                out[j, l] += rho[i * dim_b + j, i * dim_b + l]
    return out


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Full-rank random density matrix (Wishart construction)."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_pure(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-ish random normalized ket."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar random unitary via QR with phase fixing."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def bell_ket(phase: float = 0.0) -> np.ndarray:
    """(|R,l1> + e^{i phase} |L,l2>)/sqrt(2) in spin-major order, by hand."""
    return np.array([1.0, 0.0, 0.0, np.exp(1j * phase)], dtype=complex) / SQRT2


def bell_density(phase: float = 0.0) -> np.ndarray:
    k = bell_ket(phase)
    return np.outer(k, k.conj())


def werner_density(p: float, phase: float = 0.0) -> np.ndarray:
    return p * bell_density(phase) + (1.0 - p) * np.eye(4, dtype=complex) / 4.0


def amplitude_probability(ket4: np.ndarray, spin_ket: np.ndarray, oam_ket: np.ndarray) -> float:
    """|<s| <o| psi>|^2 by explicit amplitude expansion (no trace machinery)."""
    amp = sum(
        np.conj(spin_ket[s]) * np.conj(oam_ket[o]) * ket4[2 * s + o]
        for s in range(2)
        for o in range(2)
    )
    return float(abs(amp) ** 2)
