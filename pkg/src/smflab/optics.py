"""Optical elements coupling spin and OAM, the fibre link, and projectors.

Polarisation conventions
------------------------
The computational spin basis is circular, index 0 = |R>, 1 = |L>, with

* |H> = (|R> + |L>)/sqrt(2)
* |V> = i (|R> - |L>)/sqrt(2)
* |D> = (|H> + |V>)/sqrt(2),  |A> = (|H> - |V>)/sqrt(2)

The equatorial analyzer family is |s(theta)> = (|R> + e^{-i theta}|L>)/sqrt(2);
theta = 0, pi/2, pi, 3pi/2 reproduce the H, D, V, A projectors exactly (the
global phase of |V> above is fixed by that correspondence). On the OAM qubit
(ell_1, ell_2) the analogous family is |theta> = (|ell_1> + e^{i theta}|ell_2>)/sqrt(2).

Wave plates are built in the linear (H, V) basis as
``R(chi) diag(1, e^{-i delta}) R(-chi)`` with retardance delta (pi/2 for a
quarter-wave plate, pi for a half-wave plate) and fast-axis angle chi, then
conjugated into the circular basis. With these signs a quarter-wave plate at
45 degrees maps R -> H and L -> V, and a half-wave plate at 0 swaps R <-> L
with no extra phase.

A q-plate of charge q acts on the spin-arm photon as
``|l>|R> -> |l - 2q>|L>`` and ``|l>|L> -> |l + 2q>|R>`` (2q integer here, so
the OAM shift stays on the integer grid). Applying the same plate twice
restores the input: the element is an involution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import NumericalError, dagger, matrices_close, projector, tensor_product
from .states import BiPhotonKet, HybridState, SpdcKet, SubspaceLabel, apply_werner, spdc_state

KET_R = np.array([1.0, 0.0], dtype=complex)
KET_L = np.array([0.0, 1.0], dtype=complex)
KET_H = (KET_R + KET_L) / np.sqrt(2.0)
KET_V = 1j * (KET_R - KET_L) / np.sqrt(2.0)
KET_D = (KET_H + KET_V) / np.sqrt(2.0)
KET_A = (KET_H - KET_V) / np.sqrt(2.0)

SPIN_STATES = {"R": KET_R, "L": KET_L, "H": KET_H, "V": KET_V, "D": KET_D, "A": KET_A}

# analyzer phase that reproduces each linear polarizer setting
SPIN_PHASES = {"H": 0.0, "D": np.pi / 2.0, "V": np.pi, "A": 3.0 * np.pi / 2.0}

# circular <- linear basis change: columns are |H>, |V> in the circular basis
_CIRC_FROM_LIN = np.column_stack([KET_H, KET_V])

QUARTER_WAVE = "QWP"
HALF_WAVE = "HWP"
_RETARDANCE = {QUARTER_WAVE: np.pi / 2.0, HALF_WAVE: np.pi}


def spin_phase_ket(theta: float) -> np.ndarray:
    """Equatorial polarisation analyzer state (|R> + e^{-i theta}|L>)/sqrt(2)."""
    return np.array([1.0, np.exp(-1j * theta)], dtype=complex) / np.sqrt(2.0)


def oam_phase_ket(theta: float) -> np.ndarray:
    """OAM analyzer state (|ell_1> + e^{i theta}|ell_2>)/sqrt(2) in subspace basis."""
    return np.array([1.0, np.exp(1j * theta)], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class QPlate:
    """Geometric-phase plate of topological charge q (2q must be an integer)."""

    q: float

    def __post_init__(self) -> None:
        shift = 2.0 * self.q
        if abs(shift - round(shift)) > 1e-12:
            raise ValueError(f"2q must be an integer, got q={self.q!r}")
        if round(shift) == 0:
            raise ValueError("q-plate charge must be nonzero")

    @property
    def oam_shift(self) -> int:
        """Magnitude of the OAM transfer, |2q| in units of hbar."""
        return int(round(2.0 * self.q))


@dataclass(frozen=True, eq=False)
class SpinElement:
    """Unitary Jones matrix acting on the spin-arm polarisation (circular basis)."""

    jones: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        jones = np.asarray(self.jones, dtype=complex)
        if jones.shape != (2, 2):
            raise ValueError(f"Jones matrix must be 2x2, got {jones.shape}")
        if not matrices_close(jones @ dagger(jones), np.eye(2), atol=1e-10):
            raise ValueError(f"Jones matrix is not unitary: {self.label or jones!r}")
        object.__setattr__(self, "jones", jones)


@dataclass(frozen=True)
class ChannelParams:
    """Fibre link model: residual birefringence rotation plus isotropic noise.

    ``werner_p`` is the surviving fraction of the input state,
    ``birefringence_angles`` are zyz Euler angles of the spin rotation the
    fibre applies before the noise.
    """

    werner_p: float = 1.0
    birefringence_angles: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if not 0.0 <= self.werner_p <= 1.0:
            raise ValueError(f"werner_p must be in [0, 1], got {self.werner_p!r}")
        angles = tuple(float(a) for a in self.birefringence_angles)
        if len(angles) != 3:
            raise ValueError(f"birefringence needs 3 Euler angles, got {len(angles)}")
        object.__setattr__(self, "birefringence_angles", angles)


def waveplate(kind: str, fast_axis: float) -> SpinElement:
    """Quarter- or half-wave plate with the given fast-axis angle (radians)."""
    if kind not in _RETARDANCE:
        raise ValueError(f"kind must be one of {sorted(_RETARDANCE)}, got {kind!r}")
    delta = _RETARDANCE[kind]
    c, s = np.cos(fast_axis), np.sin(fast_axis)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    retarder = np.diag([1.0, np.exp(-1j * delta)])
    lin = rot @ retarder @ rot.T
    jones = _CIRC_FROM_LIN @ lin @ dagger(_CIRC_FROM_LIN)
    return SpinElement(jones, label=f"{kind}({fast_axis:g})")


def spin_unitary(angles) -> np.ndarray:
    """SU(2) rotation from zyz Euler angles (alpha, beta, gamma)."""
    alpha, beta, gamma = (float(a) for a in angles)

    def rz(t: float) -> np.ndarray:
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])

    def ry(t: float) -> np.ndarray:
        c, s = np.cos(t / 2.0), np.sin(t / 2.0)
        return np.array([[c, -s], [s, c]], dtype=complex)

    return rz(alpha) @ ry(beta) @ rz(gamma)


def attach_spin(spdc: SpdcKet, spin: str = "H", ell_max_spin: int | None = None) -> BiPhotonKet:
    """Embed the source ket in spin (x) OAM space on the fibre-bound arm.

    ``ell_max_spin`` widens the spin-arm OAM window (needed before q-plates
    shift amplitudes toward the window edge); defaults to the source window.
    """
    if spin not in SPIN_STATES:
        raise ValueError(f"spin must be one of {sorted(SPIN_STATES)}, got {spin!r}")
    window = spdc.ell_max if ell_max_spin is None else int(ell_max_spin)
    if window < spdc.ell_max:
        raise ValueError(
            f"spin-arm window ell_max={window} cannot be smaller than the source window {spdc.ell_max}"
        )
    ds = 2 * window + 1
    df = 2 * spdc.ell_max + 1
    pad = window - spdc.ell_max
    oam = np.zeros((ds, df), dtype=complex)
    oam[pad : pad + df, :] = spdc.amplitudes
    amps = np.einsum("s,af->saf", SPIN_STATES[spin], oam)
    return BiPhotonKet(amps, ell_max_spin_arm=window, ell_max_free_arm=spdc.ell_max)


def qplate_apply(state: BiPhotonKet, plate: QPlate, arm: str = "spin") -> BiPhotonKet:
    """Apply a q-plate to the fibre-bound arm: |l>|R> -> |l-2q>|L>, |l>|L> -> |l+2q>|R>."""
    if arm != "spin":
        raise ValueError(f"only the spin arm carries a polarisation index, got arm={arm!r}")
    k = int(round(2.0 * plate.q))
    amps = state.amplitudes
    ds = amps.shape[1]
    out = np.zeros_like(amps)
    # R branch shifts down by 2q and flips to L; L branch shifts up and flips to R
    for i in range(ds):
        if np.any(amps[0, i, :] != 0):
            j = i - k
            if not 0 <= j < ds:
                raise ValueError(
                    "OAM shift leaves the truncation window; need ell_max_spin_arm >= "
                    f"{abs(i - state.ell_max_spin_arm - k)}"
                )
            out[1, j, :] += amps[0, i, :]
        if np.any(amps[1, i, :] != 0):
            j = i + k
            if not 0 <= j < ds:
                raise ValueError(
                    "OAM shift leaves the truncation window; need ell_max_spin_arm >= "
                    f"{abs(i - state.ell_max_spin_arm + k)}"
                )
            out[0, j, :] += amps[1, i, :]
    return BiPhotonKet(
        out,
        ell_max_spin_arm=state.ell_max_spin_arm,
        ell_max_free_arm=state.ell_max_free_arm,
        free_arm_polarisation=state.free_arm_polarisation,
    )


def apply_spin_element(state: BiPhotonKet, element: SpinElement) -> BiPhotonKet:
    """Apply a polarisation unitary to the fibre-bound arm."""
    amps = np.einsum("ts,saf->taf", element.jones, state.amplitudes)
    return BiPhotonKet(
        amps,
        ell_max_spin_arm=state.ell_max_spin_arm,
        ell_max_free_arm=state.ell_max_free_arm,
        free_arm_polarisation=state.free_arm_polarisation,
    )


def qplate_cascade_spec(target_ell: int, hwp_angle: float = 0.0):
    """Element sequence transferring |2 * target_ell| OAM quanta with q = 1/2 plates.

    target 1 uses a single plate; target 2 interleaves a half-wave plate so the
    second plate continues the shift instead of undoing it. The half-wave
    fast-axis angle is configurable and defaults to 0.
    """
    if target_ell == 1:
        return (QPlate(0.5),)
    if target_ell == 2:
        return (QPlate(0.5), waveplate(HALF_WAVE, hwp_angle), QPlate(0.5))
    raise ValueError(f"no cascade recipe for target_ell={target_ell!r} (supported: 1, 2)")


def apply_cascade(state: BiPhotonKet, elements) -> BiPhotonKet:
    """Apply a mixed sequence of q-plates and spin elements in order."""
    for element in elements:
        if isinstance(element, QPlate):
            state = qplate_apply(state, element)
        elif isinstance(element, SpinElement):
            state = apply_spin_element(state, element)
        else:
            raise TypeError(f"unsupported cascade element {type(element).__name__}")
    return state


def post_select_smf(state: BiPhotonKet, sub: SubspaceLabel) -> HybridState:
    """Condition on fundamental-mode (ell = 0) transmission of the fibre arm.

    Keeps the spin of the fibre photon and the (ell_1, ell_2) qubit of the
    free-space photon, renormalized on the post-selected subspace.
    """
    for ell in (sub.ell_1, sub.ell_2):
        if abs(ell) > state.ell_max_free_arm:
            raise ValueError(
                f"subspace index {ell} is outside the free-arm window "
                f"ell_max={state.ell_max_free_arm}"
            )
    fibre = state.amplitudes[:, state.ell_max_spin_arm, :]  # ell = 0 slice
    i1 = sub.ell_1 + state.ell_max_free_arm
    i2 = sub.ell_2 + state.ell_max_free_arm
    ket = np.array([fibre[0, i1], fibre[0, i2], fibre[1, i1], fibre[1, i2]])
    weight = float(np.sum(np.abs(ket) ** 2))
    if weight < 1e-12:
        raise NumericalError(
            f"post-selection on ell=0 and subspace {sub} has no support (weight {weight:.3e})"
        )
    return HybridState(projector(ket), sub, label=f"pipeline{sub}")


def hybrid_from_pipeline(spectrum, target_ell: int, hwp_angle: float = 0.0) -> HybridState:
    """Source -> q-plate cascade -> fibre post-selection, as one pipeline.

    Returns the hybrid two-qubit state on the (+target_ell, -target_ell)
    subspace; R pairs with +target_ell.
    """
    elements = qplate_cascade_spec(target_ell, hwp_angle=hwp_angle)
    shifts = sum(p.oam_shift for p in elements if isinstance(p, QPlate))
    ket = attach_spin(spdc_state(spectrum), spin="H", ell_max_spin=spectrum.ell_max + shifts)
    ket = apply_cascade(ket, elements)
    return post_select_smf(ket, SubspaceLabel(target_ell, -target_ell))


def smf_channel(state: HybridState, params: ChannelParams) -> HybridState:
    """Fibre link: spin rotation (U (x) I) rho (U (x) I)^dagger, then isotropic noise."""
    u = tensor_product(spin_unitary(params.birefringence_angles), np.eye(2))
    rotated = HybridState(u @ state.rho @ dagger(u), state.subspace, state.label)
    return apply_werner(rotated, params.werner_p)


def projector_spin(which, elements=()) -> np.ndarray:
    """Polarisation projector, optionally preceded by wave plates.

    ``which`` is a basis label (R, L, H, V, D, A) or an analyzer phase in
    radians. ``elements`` are applied to the photon before the polarizer, so
    the effective projector is U^dagger |which><which| U with U the ordered
    product of the element Jones matrices.
    """
    if isinstance(which, str):
        if which not in SPIN_STATES:
            raise ValueError(f"unknown polarisation label {which!r}")
        ket = SPIN_STATES[which]
    else:
        ket = spin_phase_ket(float(which))
    u = np.eye(2, dtype=complex)
    for element in elements:
        u = element.jones @ u
    return dagger(u) @ projector(ket) @ u


def projector_oam(which) -> np.ndarray:
    """OAM projector in the (ell_1, ell_2) subspace basis.

    ``which`` is ``"ell1"``, ``"ell2"`` or a superposition phase in radians.
    """
    if isinstance(which, str):
        if which == "ell1":
            return np.diag([1.0, 0.0]).astype(complex)
        if which == "ell2":
            return np.diag([0.0, 1.0]).astype(complex)
        raise ValueError(f"unknown OAM label {which!r}")
    return projector(oam_phase_ket(float(which)))
