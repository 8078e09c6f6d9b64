"""Coincidence measurement simulation on the hybrid two-qubit state.

A measurement setting is a pair of rank-1 projectors (spin arm, OAM arm);
the coincidence probability for a projector pair is tr[(P_s (x) P_o) rho].
Counts are Poisson with mean ``pairs_per_setting * probability``, drawn from
an independent, deterministic substream per setting:
``numpy.random.default_rng([seed, setting_index])``. Simulating the same
settings with the same seed therefore reproduces identical counts regardless
of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import NumericalError, dagger, matrices_close, tensor_product
from .optics import projector_oam, projector_spin, waveplate
from .states import HybridState, MultiDimState

PROJECTOR_ATOL = 1e-10

ERASER_MODES = ("distinguish", "erase")
SPECTRUM_SPIN_SELECTORS = ("R", "L", "H", "V")

# canonical fringe-scan polarizer settings, analyzer phase -> label
BELL_CURVE_POLARIZATIONS = {3.0 * np.pi / 2.0: "A", np.pi: "V", np.pi / 2.0: "D", 0.0: "H"}


@dataclass(frozen=True, eq=False)
class MeasurementSetting:
    """Rank-1 projector pair: polarisation analyzer x OAM analyzer."""

    spin_projector: np.ndarray
    oam_projector: np.ndarray
    label: str

    def __post_init__(self) -> None:
        for name, p in (("spin", self.spin_projector), ("oam", self.oam_projector)):
            p = np.asarray(p, dtype=complex)
            if p.shape != (2, 2):
                raise ValueError(f"{name} projector must be 2x2, got {p.shape}")
            if not matrices_close(p, dagger(p), atol=PROJECTOR_ATOL):
                raise ValueError(f"{name} projector is not Hermitian ({self.label})")
            if not matrices_close(p @ p, p, atol=PROJECTOR_ATOL):
                raise ValueError(f"{name} projector is not idempotent ({self.label})")
            if abs(np.trace(p) - 1.0) > PROJECTOR_ATOL:
                raise ValueError(f"{name} projector is not rank-1 ({self.label})")
            object.__setattr__(self, f"{name}_projector", p)

    @property
    def operator(self) -> np.ndarray:
        return tensor_product(self.spin_projector, self.oam_projector)


@dataclass(frozen=True, eq=False)
class CoincidenceRecord:
    """Simulated coincidence counts for one setting.

    ``counts`` is a Poisson draw with mean ``total_pairs * probability``, so
    individual draws can fluctuate above ``total_pairs``; only the mean is
    bounded by the pair budget.
    """

    setting: MeasurementSetting
    counts: int
    total_pairs: int
    seed: int

    def __post_init__(self) -> None:
        if self.counts < 0:
            raise ValueError(f"counts must be nonnegative, got {self.counts}")
        if self.total_pairs <= 0:
            raise ValueError(f"total_pairs must be positive, got {self.total_pairs}")


def _density_of(state) -> np.ndarray:
    if isinstance(state, HybridState):
        return state.rho
    rho = np.asarray(state, dtype=complex)
    return rho


def detection_probability(state, setting: MeasurementSetting) -> float:
    """Coincidence probability tr[(P_s (x) P_o) rho], clipped to [0, 1]."""
    rho = _density_of(state)
    if rho.shape != (4, 4):
        raise ValueError(
            f"state dimension {rho.shape} does not match the 4x4 setting operator"
        )
    p = float(np.real(np.trace(setting.operator @ rho)))
    if p < -PROJECTOR_ATOL or p > 1.0 + PROJECTOR_ATOL:
        raise NumericalError(f"probability {p!r} outside [0, 1] beyond tolerance")
    return min(max(p, 0.0), 1.0)


def simulate_counts(
    state,
    settings,
    pairs_per_setting: int,
    seed: int,
    background: float = 0.0,
) -> list:
    """Poisson coincidence counts for each setting.

    ``background`` adds a flat accidental-coincidence probability per pair
    (default 0). Setting ``i`` draws from ``default_rng([seed, i])``.
    """
    if pairs_per_setting <= 0:
        raise ValueError(f"pairs_per_setting must be positive, got {pairs_per_setting}")
    if background < 0.0:
        raise ValueError(f"background must be nonnegative, got {background!r}")
    records = []
    for i, setting in enumerate(settings):
        p = detection_probability(state, setting)
        rng = np.random.default_rng([seed, i])
        counts = int(rng.poisson(pairs_per_setting * (p + background)))
        records.append(
            CoincidenceRecord(setting=setting, counts=counts, total_pairs=pairs_per_setting, seed=seed)
        )
    return records


def _embed_components(state):
    if isinstance(state, HybridState):
        return ((1.0, state),)
    if isinstance(state, MultiDimState):
        return state.components
    raise TypeError(f"expected HybridState or MultiDimState, got {type(state).__name__}")


def mode_spectrum(state, spin_sel: str, ell_window: int) -> dict:
    """OAM distribution of the free-space photon conditioned on a spin outcome.

    Returns ``{ell: P(ell | spin_sel)}`` for ``ell in [-ell_window, +ell_window]``,
    normalized over the window. The window must contain every OAM index the
    state lives on.
    """
    if spin_sel not in SPECTRUM_SPIN_SELECTORS:
        raise ValueError(
            f"spin_sel must be one of {SPECTRUM_SPIN_SELECTORS}, got {spin_sel!r}"
        )
    if ell_window < 0:
        raise ValueError(f"ell_window must be >= 0, got {ell_window}")
    components = _embed_components(state)
    levels = set()
    for _, comp in components:
        levels.add(comp.subspace.ell_1)
        levels.add(comp.subspace.ell_2)
    outside = sorted(ell for ell in levels if abs(ell) > ell_window)
    if outside:
        raise ValueError(
            f"window ell_window={ell_window} does not contain state OAM indices {outside}"
        )
    ps = projector_spin(spin_sel)
    joint = {ell: 0.0 for ell in range(-ell_window, ell_window + 1)}
    for weight, comp in components:
        for which, ell in (("ell1", comp.subspace.ell_1), ("ell2", comp.subspace.ell_2)):
            op = tensor_product(ps, projector_oam(which))
            joint[ell] += weight * float(np.real(np.trace(op @ comp.rho)))
    total = sum(joint.values())
    if total < 1e-15:
        raise NumericalError(f"spin outcome {spin_sel!r} has zero probability; cannot condition")
    return {ell: max(p, 0.0) / total for ell, p in joint.items()}


def spin_setting_for_phase(theta_b: float):
    """(projector, label) for an analyzer phase; canonical phases get letter labels."""
    wrapped = float(theta_b) % (2.0 * np.pi)
    for phase, name in BELL_CURVE_POLARIZATIONS.items():
        if abs(wrapped - phase) < 1e-12 or abs(wrapped - phase - 2.0 * np.pi) < 1e-12:
            return projector_spin(name), name
    return projector_spin(wrapped), f"phase{wrapped:.10g}"


def bell_curve(state, theta_b: float, theta_a_grid, pairs_per_setting: int, seed: int) -> list:
    """Coincidence fringe: fixed polarizer, OAM analyzer phase swept over the grid.

    For the ideal hybrid Bell state the mean counts follow
    ``pairs_per_setting * (1 + cos(theta_a - theta_b)) / 4``.
    """
    grid = [float(t) for t in theta_a_grid]
    if not grid:
        raise ValueError("theta_a_grid must not be empty")
    spin_proj, spin_label = spin_setting_for_phase(theta_b)
    settings = [
        MeasurementSetting(
            spin_projector=spin_proj,
            oam_projector=projector_oam(theta_a),
            label=f"{spin_label}|{theta_a:.10g}",
        )
        for theta_a in grid
    ]
    return simulate_counts(state, settings, pairs_per_setting, seed)


def eraser_scan(state, mode: str, theta_a_grid, pairs_per_setting: int, seed: int) -> list:
    """Which-path eraser fringe scan.

    The spin arm always carries the quarter-wave marker plate at 45 degrees;
    ``mode="distinguish"`` analyzes behind an H polarizer (path information
    kept, flat coincidences), ``mode="erase"`` behind a D polarizer (path
    information erased, full fringes on the ideal state).
    """
    if mode not in ERASER_MODES:
        raise ValueError(f"mode must be one of {ERASER_MODES}, got {mode!r}")
    grid = [float(t) for t in theta_a_grid]
    if not grid:
        raise ValueError("theta_a_grid must not be empty")
    marker = waveplate("QWP", np.pi / 4.0)
    polarizer = "H" if mode == "distinguish" else "D"
    spin_proj = projector_spin(polarizer, elements=(marker,))
    settings = [
        MeasurementSetting(
            spin_projector=spin_proj,
            oam_projector=projector_oam(theta_a),
            label=f"{mode}|{theta_a:.10g}",
        )
        for theta_a in grid
    ]
    return simulate_counts(state, settings, pairs_per_setting, seed)
