"""Entanglement and correlation metrics.

CHSH conventions
----------------
Correlations are built from coincidence counts at analyzer phases. For a
setting pair (a, b) the correlation uses the orthogonal-complement counts:

    A = C(a, b) + C(a + pi, b + pi)        (same-outcome coincidences)
    B = C(a + pi, b) + C(a, b + pi)        (opposite-outcome coincidences)
    E(a, b) = (A - B) / (A + B)

where a shift of pi in analyzer phase selects the orthogonal state (a 90
degree rotation of the physical analyzer). On the ideal hybrid Bell state
E(a, b) = cos(a - b), and the default settings

    OAM:          a = 7pi/4, a' = pi/4
    polarisation: b = 0 (H/V basis), b' = pi/2 (D/A basis)

give S = E(a, b) - E(a, b') + E(a', b) + E(a', b') = 2 sqrt(2). Uncertainty
propagates Poisson count noise: var E = 4 A B / (A + B)^3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import PSD_NEG_TOL, NumericalError, psd_sqrt, tensor_product
from .optics import oam_phase_ket, projector_oam, spin_phase_ket
from .states import HybridState

CHSH_MAX = 2.0 * np.sqrt(2.0)

CHSH_OAM_PHASES = (7.0 * np.pi / 4.0, np.pi / 4.0)
CHSH_SPIN_PHASES = (0.0, np.pi / 2.0)

_ANGLE_ATOL = 1e-9


def _density_of(state) -> np.ndarray:
    if isinstance(state, HybridState):
        return state.rho
    return np.asarray(state, dtype=complex)


def _clean_root(rho: np.ndarray) -> np.ndarray:
    """PSD square root with a relative zero floor on the spectrum.

    Eigenvalues below ``1e-13 * max`` are treated as exact zeros: taking the
    square root amplifies representation noise of rank-deficient states to
    the sqrt(eps) scale, which would otherwise leak into trace fidelities.
    """
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2.0)
    if w.min() < -PSD_NEG_TOL:
        raise NumericalError(f"matrix has negative eigenvalue {w.min():.3e}")
    floor = max(float(w.max()), 0.0) * 1e-13
    w = np.where(w > floor, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho_target, rho_probe) -> float:
    """Uhlmann fidelity tr(sqrt(sqrt(rho_t) rho_p sqrt(rho_t)))^2, in [0, 1].

    Evaluated as the squared nuclear norm of sqrt(rho_t) sqrt(rho_p), which
    equals the trace form but keeps near-zero singular values at machine
    accuracy instead of square-rooting them.
    """
    a = _density_of(rho_target)
    b = _density_of(rho_probe)
    if a.shape != b.shape:
        raise ValueError(f"state dimensions differ: {a.shape} vs {b.shape}")
    sv = np.linalg.svd(_clean_root(a) @ _clean_root(b), compute_uv=False)
    f = float(np.sum(sv)) ** 2
    return min(max(f, 0.0), 1.0)


def concurrence(rho) -> float:
    """Two-qubit concurrence via the spin-flipped state.

    rho_tilde = (sigma_y (x) sigma_y) rho* (sigma_y (x) sigma_y); with
    lambda_i the descending square roots of the eigenvalues of
    rho rho_tilde, C = max(0, lambda_1 - lambda_2 - lambda_3 - lambda_4).
    """
    rho = _density_of(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence is defined for 4x4 states, got {rho.shape}")
    sy = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    yy = tensor_product(sy, sy)
    # The lambda_i equal the singular values of sqrt(rho) YY sqrt(rho)*,
    # since that matrix times its adjoint is sqrt(rho) rho_tilde sqrt(rho),
    # which shares its spectrum with rho rho_tilde.  The SVD route avoids
    # the ill-conditioned non-normal eigenproblem of rho rho_tilde itself.
    root = psd_sqrt(rho)
    lam = np.linalg.svd(root @ yy @ root.conj(), compute_uv=False)
    return max(0.0, float(lam[0] - lam[1] - lam[2] - lam[3]))


def purity(rho) -> float:
    """tr(rho^2)."""
    rho = _density_of(rho)
    return float(np.real(np.trace(rho @ rho)))


def _chsh_phase_grid(a: float, a_prime: float, b: float, b_prime: float):
    """The 16 (theta_a, theta_b) pairs needed for one CHSH evaluation."""
    pairs = []
    for x in (a, a_prime):
        for y in (b, b_prime):
            pairs.append((x, y))
    grid = set()
    for x, y in pairs:
        for dx in (0.0, np.pi):
            for dy in (0.0, np.pi):
                grid.add((x + dx, y + dy))
    return pairs, sorted(grid)


def _wrap(angle: float) -> float:
    return float(angle) % (2.0 * np.pi)


class _CountLookup:
    """Angle-tolerant lookup of counts keyed by (theta_a, theta_b)."""

    def __init__(self, counts) -> None:
        self._items = [
            (_wrap(ta), _wrap(tb), float(c)) for (ta, tb), c in dict(counts).items()
        ]

    def get(self, theta_a: float, theta_b: float) -> float:
        ta, tb = _wrap(theta_a), _wrap(theta_b)
        for xa, xb, c in self._items:
            da = min(abs(xa - ta), 2.0 * np.pi - abs(xa - ta))
            db = min(abs(xb - tb), 2.0 * np.pi - abs(xb - tb))
            if da < _ANGLE_ATOL and db < _ANGLE_ATOL:
                return c
        raise ValueError(
            f"unmeasured setting: theta_a={theta_a!r}, theta_b={theta_b!r} not in counts"
        )


def _correlation(lookup: _CountLookup, x: float, y: float) -> tuple:
    a = lookup.get(x, y) + lookup.get(x + np.pi, y + np.pi)
    b = lookup.get(x + np.pi, y) + lookup.get(x, y + np.pi)
    if a + b <= 0.0:
        raise ValueError(f"zero total coincidences at setting ({x!r}, {y!r})")
    e = (a - b) / (a + b)
    var = 4.0 * a * b / (a + b) ** 3
    return e, var


def chsh_from_counts(
    counts,
    a: float = CHSH_OAM_PHASES[0],
    a_prime: float = CHSH_OAM_PHASES[1],
    b: float = CHSH_SPIN_PHASES[0],
    b_prime: float = CHSH_SPIN_PHASES[1],
) -> tuple:
    """CHSH S and its Poisson uncertainty from coincidence counts.

    ``counts`` maps (theta_a, theta_b) analyzer phases to coincidence counts;
    all 16 phase combinations (settings and their orthogonal complements)
    must be present. Angle matching is modulo 2 pi with 1e-9 tolerance.
    Returns (S, sigma_S) with S = E(a,b) - E(a,b') + E(a',b) + E(a',b').
    """
    lookup = _CountLookup(counts)
    e_ab, v_ab = _correlation(lookup, a, b)
    e_ab2, v_ab2 = _correlation(lookup, a, b_prime)
    e_a2b, v_a2b = _correlation(lookup, a_prime, b)
    e_a2b2, v_a2b2 = _correlation(lookup, a_prime, b_prime)
    s = e_ab - e_ab2 + e_a2b + e_a2b2
    sigma = float(np.sqrt(v_ab + v_ab2 + v_a2b + v_a2b2))
    return float(s), sigma


def chsh_expectation(
    rho,
    a: float = CHSH_OAM_PHASES[0],
    a_prime: float = CHSH_OAM_PHASES[1],
    b: float = CHSH_SPIN_PHASES[0],
    b_prime: float = CHSH_SPIN_PHASES[1],
) -> float:
    """Trace-formula CHSH: S = tr[rho (O_s(b) (x) O_o(a))] combinations.

    Dichotomic observables are projector differences,
    O(theta) = P(theta) - P(theta + pi). This is the analytic counterpart of
    :func:`chsh_from_counts` and carries no sampling noise.
    """
    rho = _density_of(rho)

    def spin_obs(theta: float) -> np.ndarray:
        plus = np.outer(spin_phase_ket(theta), spin_phase_ket(theta).conj())
        minus = np.outer(spin_phase_ket(theta + np.pi), spin_phase_ket(theta + np.pi).conj())
        return plus - minus

    def oam_obs(theta: float) -> np.ndarray:
        return projector_oam(theta) - projector_oam(theta + np.pi)

    def corr(x: float, y: float) -> float:
        return float(np.real(np.trace(tensor_product(spin_obs(y), oam_obs(x)) @ rho)))

    return corr(a, b) - corr(a, b_prime) + corr(a_prime, b) + corr(a_prime, b_prime)


def visibility(thetas, counts) -> tuple:
    """Fringe visibility from a sinusoidal fit, with Poisson uncertainty.

    Fits ``counts = a0 + c cos(theta) + d sin(theta)`` by least squares and
    returns (V, sigma_V) with V = sqrt(c^2 + d^2)/a0 clipped to [0, 1].
    Needs at least 8 points spanning at least 7/8 of a period.
    """
    thetas = np.asarray([float(t) for t in thetas])
    counts = np.asarray([float(c) for c in counts])
    if thetas.shape != counts.shape:
        raise ValueError(f"got {thetas.size} angles but {counts.size} counts")
    if thetas.size < 8:
        raise ValueError(f"visibility fit needs >= 8 points, got {thetas.size}")
    span = float(thetas.max() - thetas.min())
    if span < 2.0 * np.pi * (7.0 / 8.0) - 1e-9:
        raise ValueError(f"angles span {span!r}, need at least 7/8 of a period")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    design = np.column_stack([np.ones_like(thetas), np.cos(thetas), np.sin(thetas)])
    beta, *_ = np.linalg.lstsq(design, counts, rcond=None)
    a0, c, d = (float(v) for v in beta)
    if a0 <= 0.0:
        raise ValueError(f"fitted mean level {a0!r} is not positive; cannot form a visibility")
    amp = float(np.hypot(c, d))
    vis = min(max(amp / a0, 0.0), 1.0)
    # Poisson noise: var(count) = mean; propagate through the linear fit
    weights = np.clip(counts, 1.0, None)
    gram_inv = np.linalg.inv(design.T @ design)
    cov = gram_inv @ (design.T * weights) @ design @ gram_inv
    if amp > 1e-12:
        grad = np.array([-amp / a0**2, c / (a0 * amp), d / (a0 * amp)])
    else:
        grad = np.array([0.0, 1.0 / a0, 1.0 / a0])
    sigma = float(np.sqrt(max(grad @ cov @ grad, 0.0)))
    return vis, sigma


def normalized_metrics(free_report: "MetricReport", fibre_report: "MetricReport") -> tuple:
    """(F_n, C_n): fibre metrics relative to the free-space reference."""
    if free_report.fidelity is None or fibre_report.fidelity is None:
        raise ValueError("both reports need a fidelity to normalize")
    if free_report.concurrence is None or fibre_report.concurrence is None:
        raise ValueError("both reports need a concurrence to normalize")
    if free_report.fidelity <= 0.0:
        raise ValueError("reference fidelity must be positive")
    if free_report.concurrence <= 0.0:
        raise ValueError("reference concurrence must be positive")
    return (
        fibre_report.fidelity / free_report.fidelity,
        fibre_report.concurrence / free_report.concurrence,
    )


_RANGES = {
    "fidelity": (0.0, 1.0),
    "concurrence": (0.0, 1.0),
    "chsh_s": (0.0, CHSH_MAX),
    "visibility": (0.0, 1.0),
    "purity": (0.25, 1.0),
}
_RANGE_SLACK = 1e-9


@dataclass
class MetricReport:
    """Bundle of state metrics for one run.

    Values within 1e-9 of their physical range are clipped onto it. The
    ``chsh_s`` field is additionally clipped at the quantum bound 2 sqrt(2):
    a finite-sample estimator can exceed the bound by shot noise, and the raw
    estimate then lives in the scenario output next to this report.
    ``uncertainties`` maps field names to one-sigma estimates.
    """

    fidelity: float | None = None
    concurrence: float | None = None
    chsh_s: float | None = None
    visibility: float | None = None
    purity: float | None = None
    fidelity_normalized: float | None = None
    concurrence_normalized: float | None = None
    uncertainties: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, (lo, hi) in _RANGES.items():
            value = getattr(self, name)
            if value is None:
                continue
            value = float(value)
            if name == "chsh_s":
                value = min(value, hi)
            if value < lo - _RANGE_SLACK or value > hi + _RANGE_SLACK:
                raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")
            setattr(self, name, min(max(value, lo), hi))

    def to_dict(self) -> dict:
        out = {}
        for name in (
            "fidelity",
            "concurrence",
            "chsh_s",
            "visibility",
            "purity",
            "fidelity_normalized",
            "concurrence_normalized",
        ):
            value = getattr(self, name)
            if value is not None:
                out[name] = float(value)
        out["uncertainties"] = {k: float(v) for k, v in self.uncertainties.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        kwargs = dict(data)
        kwargs.setdefault("uncertainties", {})
        return cls(**kwargs)
