import numpy as np
import pytest

from smflab.linalg import NumericalError, validate_density
from smflab.measurement import CoincidenceRecord, detection_probability, simulate_counts
from smflab.metrics import fidelity
from smflab.states import HybridState, SubspaceLabel, apply_werner, post_select_hybrid
from smflab.tomography import (
    TomographySet,
    design_matrix,
    estimate_probabilities,
    group_index,
    label_parts,
    project_to_physical,
    reconstruct_from_probabilities,
    reconstruct_linear,
    standard_settings,
    two_qubit_pauli_basis,
)

from helpers import bell_density, random_density, werner_density

SUB = SubspaceLabel(1, -1)
TSET = standard_settings(SUB)
BELL = post_select_hybrid(SUB)


def exact_probabilities(state, tset=TSET):
    return [detection_probability(state, s) for s in tset.settings]


def records_for(state, tset=TSET, pairs=20_000):
    """Noise-free records: counts = pairs * p, exact for our rational probabilities."""
    records = []
    for s in tset.settings:
        c = pairs * detection_probability(state, s)
        assert abs(c - round(c)) < 1e-6
        records.append(CoincidenceRecord(setting=s, counts=int(round(c)), total_pairs=pairs, seed=0))
    return records


class TestStandardSettings:
    def test_exactly_36_unique_labels(self):
        labels = TSET.labels()
        assert len(labels) == 36
        assert len(set(labels)) == 36

    def test_design_matrix_rank_16(self):
        sv = np.linalg.svd(design_matrix(TSET), compute_uv=False)
        assert sv.size == 16
        assert sv[-1] > 1e-8

    def test_subspace_relabelling_is_isomorphic(self):
        other = standard_settings(SubspaceLabel(2, -2))
        assert other.labels() == TSET.labels()
        assert np.array_equal(design_matrix(other), design_matrix(TSET))

    def test_projectors_idempotent_rank_one(self):
        for s in TSET.settings:
            for p in (s.spin_projector, s.oam_projector):
                assert np.max(np.abs(p @ p - p)) < 1e-10
                assert abs(np.trace(p) - 1.0) < 1e-10

    def test_wrong_setting_count_rejected(self):
        with pytest.raises(ValueError, match="36"):
            TomographySet(subspace=SUB, settings=TSET.settings[:35])


class TestLabelHelpers:
    def test_nine_groups_of_four(self):
        groups = {}
        for label in TSET.labels():
            groups.setdefault(group_index(label), []).append(label)
        assert len(groups) == 9
        assert all(len(v) == 4 for v in groups.values())

    def test_complementary_partners_share_group(self):
        assert group_index("R|l1") == group_index("L|l2")
        assert group_index("H|th0") == group_index("V|th180")
        assert group_index("D|th90") == group_index("A|th270")

    def test_label_parts(self):
        assert label_parts("R|l1") == ("R", None)
        assert label_parts("H|th90") == ("H", np.pi / 2)
        assert label_parts("A|th270") == ("A", 3 * np.pi / 2)

    def test_nonstandard_labels_rejected(self):
        for bad in ("Q|l1", "R|l3", "R", "erase|0.5"):
            with pytest.raises(ValueError, match="label"):
                group_index(bad)
            with pytest.raises(ValueError, match="label"):
                label_parts(bad)


class TestPauliBasis:
    def test_sixteen_orthogonal_elements(self):
        basis = two_qubit_pauli_basis()
        assert len(basis) == 16
        for j, bj in enumerate(basis):
            for k, bk in enumerate(basis):
                want = 4.0 if j == k else 0.0
                assert abs(np.trace(bj @ bk) - want) < 1e-12


class TestProjectToPhysical:
    def test_fixed_point_on_physical_input(self):
        rng = np.random.default_rng(101)
        for _ in range(20):
            rho = random_density(rng, 4)
            assert np.max(np.abs(project_to_physical(rho) - rho)) < 1e-12

    def test_clip_and_renormalize_by_hand(self):
        raw = np.diag([1.1, -0.1, 0.0, 0.0]).astype(complex)
        want = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
        assert np.max(np.abs(project_to_physical(raw) - want)) < 1e-12

    def test_clip_is_frobenius_nearest_psd(self):
        rng = np.random.default_rng(103)
        for _ in range(10):
            herm = random_density(rng, 4) - 0.08 * np.eye(4)
            herm /= np.real(np.trace(herm))
            w = np.linalg.eigvalsh(herm)
            assert w.min() < 0  # the case of interest
            # eigenvalue clipping, done independently of the implementation
            vals, vecs = np.linalg.eigh(herm)
            clipped = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
            dist = np.linalg.norm(clipped - herm)
            for _ in range(200):
                candidate = random_density(rng, 4) * float(rng.uniform(0.2, 1.5))
                assert np.linalg.norm(candidate - herm) >= dist - 1e-12
            got = project_to_physical(herm)
            want = clipped / np.real(np.trace(clipped))
            assert np.max(np.abs(got - want)) < 1e-10

    def test_symmetrizes_input(self):
        rng = np.random.default_rng(107)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        herm = (a + a.conj().T) / 2
        assert np.max(np.abs(project_to_physical(a) - project_to_physical(herm))) < 1e-10

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError, match="zero matrix"):
            project_to_physical(np.zeros((4, 4)))

    def test_negative_definite_rejected(self):
        with pytest.raises(NumericalError, match="positive"):
            project_to_physical(-np.eye(4))

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError, match="4x4"):
            project_to_physical(np.eye(3))


class TestExactReconstruction:
    def test_bell_round_trip(self):
        result = reconstruct_from_probabilities(exact_probabilities(BELL), TSET)
        assert np.max(np.abs(result.rho_raw - bell_density())) < 1e-10
        assert result.residual < 1e-12

    def test_werner_round_trip(self):
        for p in (0.0, 0.5, (4 * 0.90 - 1) / 3):
            state = apply_werner(BELL, p)
            result = reconstruct_from_probabilities(exact_probabilities(state), TSET)
            assert np.max(np.abs(result.rho_raw - werner_density(p))) < 1e-10

    def test_hundred_random_states(self):
        rng = np.random.default_rng(109)
        for _ in range(100):
            rho = random_density(rng, 4)
            state = HybridState(rho, SUB)
            result = reconstruct_from_probabilities(exact_probabilities(state), TSET)
            assert np.linalg.norm(result.rho_raw - rho) < 1e-9
            assert np.linalg.norm(result.rho_physical - rho) < 1e-9

    def test_pauli_coefficients_match_direct_traces(self):
        rng = np.random.default_rng(113)
        rho = random_density(rng, 4)
        state = HybridState(rho, SUB)
        result = reconstruct_from_probabilities(exact_probabilities(state), TSET)
        basis = two_qubit_pauli_basis()
        for m in range(4):
            for n in range(4):
                want = np.trace(rho @ basis[4 * m + n])
                assert abs(np.imag(want)) < 1e-10
                assert abs(result.pauli_coefficients[m, n] - np.real(want)) < 1e-9

    def test_trace_coefficient_is_one(self):
        result = reconstruct_from_probabilities(exact_probabilities(BELL), TSET)
        assert abs(result.pauli_coefficients[0, 0] - 1.0) < 1e-10

    def test_wrong_probability_count_rejected(self):
        with pytest.raises(ValueError, match="36"):
            reconstruct_from_probabilities([0.5] * 35, TSET)

    def test_physical_output_validates(self):
        result = reconstruct_from_probabilities(exact_probabilities(BELL), TSET)
        assert validate_density(result.rho_physical).passed


class TestEstimateProbabilities:
    def test_group_normalization_exact_on_exact_counts(self):
        state = apply_werner(BELL, 0.8)
        probs = estimate_probabilities(records_for(state), TSET, normalization="group")
        assert np.max(np.abs(probs - np.array(exact_probabilities(state)))) < 1e-12

    def test_pairs_normalization_exact_on_exact_counts(self):
        state = apply_werner(BELL, 0.8)
        probs = estimate_probabilities(records_for(state), TSET, normalization="pairs")
        assert np.max(np.abs(probs - np.array(exact_probabilities(state)))) < 1e-12

    def test_both_normalizations_reconstruct(self):
        state = apply_werner(BELL, 0.8)
        records = records_for(state)
        for norm in ("group", "pairs"):
            result = reconstruct_linear(records, TSET, normalization=norm)
            assert np.max(np.abs(result.rho_raw - werner_density(0.8))) < 1e-10

    def test_group_normalization_removes_flux_scale(self):
        # halve every count: group estimates are unchanged, pairs estimates halve
        state = apply_werner(BELL, 0.8)
        scaled = [
            CoincidenceRecord(setting=r.setting, counts=r.counts // 2, total_pairs=r.total_pairs, seed=0)
            for r in records_for(state)
        ]
        probs = estimate_probabilities(scaled, TSET, normalization="group")
        assert np.max(np.abs(probs - np.array(exact_probabilities(state)))) < 1e-6

    def test_missing_settings_listed(self):
        records = records_for(BELL)[2:]
        with pytest.raises(ValueError, match="missing") as err:
            estimate_probabilities(records, TSET)
        assert "R|l1" in str(err.value) and "R|l2" in str(err.value)

    def test_zero_count_group_rejected(self):
        records = records_for(apply_werner(BELL, 0.8))
        zeroed = [
            CoincidenceRecord(setting=r.setting, counts=0, total_pairs=r.total_pairs, seed=0)
            if group_index(r.setting.label) == (0, 0)
            else r
            for r in records
        ]
        with pytest.raises(ValueError, match="zero total counts"):
            estimate_probabilities(zeroed, TSET)

    def test_unknown_normalization_rejected(self):
        with pytest.raises(ValueError, match="normalization"):
            estimate_probabilities(records_for(BELL), TSET, normalization="global")


class TestSampledReconstruction:
    def test_million_pair_fidelity(self):
        records = simulate_counts(BELL, TSET.settings, 1_000_000, seed=7)
        result = reconstruct_linear(records, TSET)
        assert fidelity(result.rho_physical, bell_density()) >= 0.999

    def test_residual_reflects_shot_noise(self):
        records = simulate_counts(BELL, TSET.settings, 10_000, seed=7)
        result = reconstruct_linear(records, TSET)
        assert 0.0 < result.residual < 0.02

    def test_fidelity_monotone_in_pair_budget(self):
        means = []
        for pairs in (100, 1_000, 10_000, 100_000):
            vals = []
            for seed in range(25):
                records = simulate_counts(BELL, TSET.settings, pairs, seed)
                result = reconstruct_linear(records, TSET)
                vals.append(fidelity(result.rho_physical, bell_density()))
            means.append(np.mean(vals))
        assert means[0] < means[1] < means[2] < means[3]
