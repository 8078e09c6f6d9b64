"""Bi-photon states: OAM spectra, down-conversion kets, hybrid two-qubit states.

Basis conventions
-----------------
* OAM windows are symmetric, ``ell in {-ell_max, ..., +ell_max}``, stored at
  array index ``ell + ell_max``.
* The down-conversion source emits OAM-anticorrelated pairs
  ``sum_l c_l |l>_s |-l>_f`` with both photons polarized H; polarisation is
  carried as metadata until an element couples spin and OAM.
* The hybrid two-qubit space is spin (x) OAM with spin-major ordering:
  index 0 = (R, ell_1), 1 = (R, ell_2), 2 = (L, ell_1), 3 = (L, ell_2).
  The spin qubit belongs to the fibre-coupled photon, the OAM qubit to the
  free-space photon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import NumericalError, partial_trace, projector, validate_density

NORM_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class OAMSpectrum:
    """Amplitudes c_l of the source OAM distribution on a symmetric window.

    ``coefficients[ell + ell_max]`` is c_ell; the amplitudes must be
    normalized, ``sum |c_l|^2 = 1`` within 1e-10.
    """

    ell_max: int
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        if self.ell_max < 0:
            raise ValueError(f"ell_max must be >= 0, got {self.ell_max}")
        coeffs = np.asarray(self.coefficients, dtype=complex).ravel()
        expected = 2 * self.ell_max + 1
        if coeffs.size != expected:
            raise ValueError(
                f"spectrum on ell_max={self.ell_max} needs {expected} coefficients, "
                f"got {coeffs.size}"
            )
        norm = float(np.sum(np.abs(coeffs) ** 2))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"spectrum is not normalized: sum |c|^2 = {norm!r}")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def uniform(cls, ell_max: int) -> "OAMSpectrum":
        d = 2 * ell_max + 1
        return cls(ell_max, np.full(d, 1.0 / np.sqrt(d), dtype=complex))

    @classmethod
    def gaussian(cls, ell_max: int, width: float) -> "OAMSpectrum":
        """c_l proportional to exp(-l^2 / (2 width^2))."""
        if width <= 0:
            raise ValueError(f"width must be positive, got {width}")
        ells = np.arange(-ell_max, ell_max + 1)
        c = np.exp(-(ells.astype(float) ** 2) / (2.0 * width**2)).astype(complex)
        return cls(ell_max, c / np.linalg.norm(c))

    def amplitude(self, ell: int) -> complex:
        if abs(ell) > self.ell_max:
            return 0.0
        return complex(self.coefficients[ell + self.ell_max])

    def probability(self, ell: int) -> float:
        return abs(self.amplitude(ell)) ** 2


@dataclass(frozen=True)
class SubspaceLabel:
    """Ordered pair of distinct OAM indices spanning one analysis qubit."""

    ell_1: int
    ell_2: int

    def __post_init__(self) -> None:
        if self.ell_1 == self.ell_2:
            raise ValueError(f"subspace needs two distinct OAM indices, got ({self.ell_1}, {self.ell_2})")

    def __str__(self) -> str:
        return f"({self.ell_1:+d},{self.ell_2:+d})"


@dataclass(frozen=True, eq=False)
class SpdcKet:
    """Pure bi-photon OAM ket from the down-conversion source.

    ``amplitudes[i_s, i_f]`` is the amplitude of |ell_s>|ell_f> with
    ``i = ell + ell_max``. Both photons are H polarized (metadata only).
    """

    ell_max: int
    amplitudes: np.ndarray
    polarisation: str = "HH"

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        d = 2 * self.ell_max + 1
        if amps.shape != (d, d):
            raise ValueError(f"amplitudes must have shape ({d}, {d}), got {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"ket is not normalized: sum |amp|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    def amplitude(self, ell_spin_arm: int, ell_free_arm: int) -> complex:
        if abs(ell_spin_arm) > self.ell_max or abs(ell_free_arm) > self.ell_max:
            return 0.0
        return complex(self.amplitudes[ell_spin_arm + self.ell_max, ell_free_arm + self.ell_max])


def spdc_state(spectrum: OAMSpectrum) -> SpdcKet:
    """OAM-anticorrelated pair ket sum_l c_l |l>_spin-arm |-l>_free-arm."""
    coeffs = spectrum.coefficients
    norm = float(np.sum(np.abs(coeffs) ** 2))
    if abs(norm - 1.0) > NORM_ATOL:
        raise ValueError(f"spectrum is not normalized: sum |c|^2 = {norm!r}")
    d = 2 * spectrum.ell_max + 1
    amps = np.zeros((d, d), dtype=complex)
    # |l> on the spin arm pairs with |-l> on the free arm
    for i in range(d):
        amps[i, d - 1 - i] = coeffs[i]
    return SpdcKet(spectrum.ell_max, amps)


@dataclass(frozen=True, eq=False)
class BiPhotonKet:
    """Pure state of spin-arm (spin (x) OAM) and free-arm (OAM) photons.

    ``amplitudes[s, i_s, i_f]`` with spin index s (0 = R, 1 = L) and OAM
    indices ``i = ell + ell_max`` per arm. The free arm keeps a fixed
    polarisation, recorded as metadata.
    """

    amplitudes: np.ndarray
    ell_max_spin_arm: int
    ell_max_free_arm: int
    free_arm_polarisation: str = "H"

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        shape = (2, 2 * self.ell_max_spin_arm + 1, 2 * self.ell_max_free_arm + 1)
        if amps.shape != shape:
            raise ValueError(f"amplitudes must have shape {shape}, got {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"ket is not normalized: sum |amp|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    def amplitude(self, spin: int, ell_spin_arm: int, ell_free_arm: int) -> complex:
        if abs(ell_spin_arm) > self.ell_max_spin_arm or abs(ell_free_arm) > self.ell_max_free_arm:
            return 0.0
        return complex(
            self.amplitudes[
                spin, ell_spin_arm + self.ell_max_spin_arm, ell_free_arm + self.ell_max_free_arm
            ]
        )


@dataclass(frozen=True, eq=False)
class HybridState:
    """Two-qubit density matrix on spin (x) OAM, spin-major basis order."""

    rho: np.ndarray
    subspace: SubspaceLabel
    label: str = ""

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"hybrid state must be 4x4, got {rho.shape}")
        report = validate_density(rho, tol=1e-8)
        if not report.passed:
            raise NumericalError(
                "invalid hybrid density matrix: "
                f"hermiticity_dev={report.hermiticity_dev:.3e}, "
                f"trace_dev={report.trace_dev:.3e}, "
                f"min_eigenvalue={report.min_eigenvalue:.3e}"
            )
        object.__setattr__(self, "rho", rho)


def post_select_hybrid(sub: SubspaceLabel, relative_phase: float = 0.0, label: str = "") -> HybridState:
    """Hybrid Bell state (|R>|ell_1> + e^{i phase} |L>|ell_2>)/sqrt(2)."""
    ket = np.zeros(4, dtype=complex)
    ket[0] = 1.0 / np.sqrt(2.0)
    ket[3] = np.exp(1j * relative_phase) / np.sqrt(2.0)
    return HybridState(projector(ket), sub, label or f"bell{sub}")


@dataclass(frozen=True, eq=False)
class MultiDimState:
    """Convex mixture of hybrid states living in different OAM subspaces."""

    components: tuple

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        weights = []
        for item in comps:
            w, state = item
            if not isinstance(state, HybridState):
                raise TypeError(f"mixture components must be HybridState, got {type(state).__name__}")
            if w < 0:
                raise ValueError(f"mixture weights must be nonnegative, got {w!r}")
            weights.append(float(w))
        total = float(sum(weights))
        if abs(total - 1.0) > NORM_ATOL:
            raise ValueError(f"mixture weights must sum to 1, got {total!r}")
        object.__setattr__(self, "components", comps)

    @property
    def oam_levels(self) -> tuple:
        """Sorted union of the OAM indices used by the components."""
        levels = set()
        for _, state in self.components:
            levels.add(state.subspace.ell_1)
            levels.add(state.subspace.ell_2)
        return tuple(sorted(levels))

    def density(self) -> np.ndarray:
        """Full density matrix on spin (x) span(oam_levels), spin-major."""
        levels = self.oam_levels
        pos = {ell: k for k, ell in enumerate(levels)}
        n = len(levels)
        big = np.zeros((2 * n, 2 * n), dtype=complex)
        for w, state in self.components:
            slots = (pos[state.subspace.ell_1], pos[state.subspace.ell_2])
            for si in range(2):
                for oi in range(2):
                    for sj in range(2):
                        for oj in range(2):
                            big[si * n + slots[oi], sj * n + slots[oj]] += (
                                w * state.rho[si * 2 + oi, sj * 2 + oj]
                            )
        return big


def multidim_mixture(components) -> MultiDimState:
    """Weighted mixture of subspace states; weights must sum to 1."""
    return MultiDimState(tuple(components))


def reduce_oam_photon(state: HybridState) -> np.ndarray:
    """Reduced 2x2 state of the free-space OAM photon (spin traced out)."""
    return partial_trace(state.rho, 2, 2, keep="B")


def apply_werner(state: HybridState, p: float) -> HybridState:
    """Isotropic noise rho' = p rho + (1 - p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner parameter must be in [0, 1], got {p!r}")
    rho = p * state.rho + (1.0 - p) * np.eye(4, dtype=complex) / 4.0
    return HybridState(rho, state.subspace, state.label)


def werner_p_for_fidelity(target_fidelity: float) -> float:
    """Werner parameter whose Bell-state fidelity equals the target.

    On the Werner family F = (3p + 1)/4, so p = (4F - 1)/3. Valid for
    targets in [0.25, 1].
    """
    if not 0.25 <= target_fidelity <= 1.0:
        raise ValueError(
            f"target fidelity must be in [0.25, 1] for isotropic noise, got {target_fidelity!r}"
        )
    return (4.0 * target_fidelity - 1.0) / 3.0
