"""Overcomplete two-qubit state tomography by linear inversion.

The standard set pairs six polarisation analyzers {R, L, H, V, D, A} with six
OAM analyzers {ell_1, ell_2, theta = 0, pi/2, pi, 3pi/2}, 36 settings total.
Each analyzer pair (R, L), (H, V), (D, A) and (ell_1, ell_2),
(theta 0, theta pi), (theta pi/2, theta 3pi/2) sums to the identity, so the
36 settings split into 9 complete 4-outcome groups whose probabilities each
sum to one. That structure drives the default count normalization: counts are
divided by their group total, which is exact for exact counts and insensitive
to slow source-flux drift between groups. ``normalization="pairs"`` divides
by the per-setting pair budget instead.

Reconstruction expands rho over the full 16-operator Pauli basis
sigma_m (x) sigma_n, m, n in {I, X, Y, Z} (single-side terms included; they
are required to represent any state with a mixed marginal) and solves the
36 x 16 least-squares system tr[M_r rho] = p_r. The raw solution is then
projected to the closest physical state by eigenvalue clipping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    NumericalError,
    dagger,
    eigen_hermitian,
    tensor_product,
    validate_density,
)
from .measurement import MeasurementSetting
from .optics import projector_oam, projector_spin
from .states import SubspaceLabel

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
PAULI_LABELS = ("I", "X", "Y", "Z")

SPIN_SETTINGS = ("R", "L", "H", "V", "D", "A")
OAM_SETTINGS = (
    ("l1", "ell1"),
    ("l2", "ell2"),
    ("th0", 0.0),
    ("th90", np.pi / 2.0),
    ("th180", np.pi),
    ("th270", 3.0 * np.pi / 2.0),
)

# complementary pairs: each group of four probabilities sums to one
_SPIN_GROUP = {"R": 0, "L": 0, "H": 1, "V": 1, "D": 2, "A": 2}
_OAM_GROUP = {"l1": 0, "l2": 0, "th0": 1, "th180": 1, "th90": 2, "th270": 2}

NORMALIZATIONS = ("group", "pairs")


def two_qubit_pauli_basis() -> list:
    """The 16 operators sigma_m (x) sigma_n in row-major (m, n) order."""
    return [tensor_product(sm, sn) for sm in PAULI for sn in PAULI]


@dataclass(frozen=True, eq=False)
class TomographySet:
    """The 36 projective settings used to reconstruct one hybrid state."""

    subspace: SubspaceLabel
    settings: tuple

    def __post_init__(self) -> None:
        if len(self.settings) != 36:
            raise ValueError(f"expected 36 settings, got {len(self.settings)}")

    def labels(self) -> list:
        return [s.label for s in self.settings]


def setting_label(spin: str, oam: str) -> str:
    return f"{spin}|{oam}"


def group_index(label: str) -> tuple:
    """(spin_pair, oam_pair) complementary-group coordinates of a setting label."""
    spin, _, oam = label.partition("|")
    if spin not in _SPIN_GROUP or oam not in _OAM_GROUP:
        raise ValueError(f"not a standard tomography label: {label!r}")
    return (_SPIN_GROUP[spin], _OAM_GROUP[oam])


_OAM_PHASE = {name: which for name, which in OAM_SETTINGS if not isinstance(which, str)}


def label_parts(label: str) -> tuple:
    """(spin_label, oam_phase) of a standard label; phase is None for eigenstates."""
    spin, _, oam = label.partition("|")
    if spin not in _SPIN_GROUP or oam not in _OAM_GROUP:
        raise ValueError(f"not a standard tomography label: {label!r}")
    return spin, _OAM_PHASE.get(oam)


def standard_settings(sub: SubspaceLabel) -> TomographySet:
    """Build the 36-setting analyzer grid for one OAM subspace."""
    settings = []
    for spin in SPIN_SETTINGS:
        ps = projector_spin(spin)
        for oam_name, oam_which in OAM_SETTINGS:
            settings.append(
                MeasurementSetting(
                    spin_projector=ps,
                    oam_projector=projector_oam(oam_which),
                    label=setting_label(spin, oam_name),
                )
            )
    return TomographySet(subspace=sub, settings=tuple(settings))


def design_matrix(tset: TomographySet) -> np.ndarray:
    """36 x 16 real matrix T with T[r, k] = tr[M_r B_k], B_k the Pauli basis.

    The trace of a product of Hermitian matrices is real; rank is 16, so the
    least-squares problem has a unique solution.
    """
    basis = two_qubit_pauli_basis()
    t = np.empty((len(tset.settings), 16))
    for r, setting in enumerate(tset.settings):
        op = setting.operator
        for k, b in enumerate(basis):
            t[r, k] = float(np.real(np.trace(op @ b)))
    return t


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Linear-inversion output.

    ``pauli_coefficients[m, n]`` is tr[rho_raw (sigma_m (x) sigma_n)]; entry
    (0, 0) is the raw trace. ``residual`` is the root-mean-square misfit
    between the input probabilities and those regenerated from rho_raw.
    """

    rho_raw: np.ndarray
    rho_physical: np.ndarray
    pauli_coefficients: np.ndarray
    residual: float


def project_to_physical(rho_raw: np.ndarray) -> np.ndarray:
    """Closest physical density matrix: clip negative eigenvalues, renormalize.

    The input is symmetrized first. Clipping at zero is the Frobenius-nearest
    positive semidefinite matrix; renormalization restores unit trace.
    """
    rho = np.asarray(rho_raw, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {rho.shape}")
    if not np.any(rho):
        raise ValueError("cannot project the zero matrix to a density matrix")
    herm = (rho + dagger(rho)) / 2.0
    eig = eigen_hermitian(herm, herm_atol=np.inf)
    w = np.clip(eig.eigenvalues, 0.0, None)
    total = float(np.sum(w))
    if total <= 0.0:
        raise NumericalError("no positive eigenvalue weight left after clipping")
    v = eig.eigenvectors
    return (v * (w / total)) @ dagger(v)


def reconstruct_from_probabilities(probs, tset: TomographySet) -> ReconstructionResult:
    """Least-squares inversion of 36 setting probabilities."""
    p = np.asarray(probs, dtype=float).ravel()
    if p.size != len(tset.settings):
        raise ValueError(f"expected {len(tset.settings)} probabilities, got {p.size}")
    t = design_matrix(tset)
    x, *_ = np.linalg.lstsq(t, p, rcond=None)
    basis = two_qubit_pauli_basis()
    rho_raw = np.zeros((4, 4), dtype=complex)
    for xk, b in zip(x, basis):
        rho_raw += xk * b
    residual = float(np.sqrt(np.mean((t @ x - p) ** 2)))
    rho_physical = project_to_physical(rho_raw)
    report = validate_density(rho_physical, tol=1e-8)
    if not report.passed:
        raise NumericalError(
            f"physical projection failed validation: min eigenvalue {report.min_eigenvalue:.3e}"
        )
    # tr[rho B_k] = 4 x_k because tr[B_j B_k] = 4 delta_jk
    pauli = (4.0 * x).reshape(4, 4)
    return ReconstructionResult(
        rho_raw=rho_raw,
        rho_physical=rho_physical,
        pauli_coefficients=pauli,
        residual=residual,
    )


def estimate_probabilities(records, tset: TomographySet, normalization: str = "group") -> np.ndarray:
    """Per-setting probability estimates from coincidence records.

    ``normalization="group"`` divides each count by the total of its
    4-outcome complementary group; ``"pairs"`` divides by the per-setting
    pair budget. Records are matched to settings by label.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    by_label = {}
    for record in records:
        by_label[record.setting.label] = record
    missing = [s.label for s in tset.settings if s.label not in by_label]
    if missing:
        raise ValueError(f"records missing for settings: {', '.join(missing)}")
    ordered = [by_label[s.label] for s in tset.settings]
    if any(r.total_pairs <= 0 for r in ordered):
        raise ValueError("total_pairs must be positive for every record")
    counts = np.array([float(r.counts) for r in ordered])
    if normalization == "pairs":
        totals = np.array([float(r.total_pairs) for r in ordered])
        return counts / totals
    group_totals = {}
    for setting, c in zip(tset.settings, counts):
        g = group_index(setting.label)
        group_totals[g] = group_totals.get(g, 0.0) + c
    probs = np.empty_like(counts)
    for i, setting in enumerate(tset.settings):
        g = group_index(setting.label)
        if group_totals[g] <= 0.0:
            raise ValueError(f"complementary group {g} has zero total counts")
        probs[i] = counts[i] / group_totals[g]
    return probs


def reconstruct_linear(records, tset: TomographySet, normalization: str = "group") -> ReconstructionResult:
    """Full pipeline: counts -> probabilities -> linear inversion -> projection."""
    probs = estimate_probabilities(records, tset, normalization=normalization)
    return reconstruct_from_probabilities(probs, tset)
