import numpy as np
import pytest

from smflab.linalg import validate_density
from smflab.metrics import concurrence, fidelity
from smflab.optics import (
    KET_A,
    KET_D,
    KET_H,
    KET_L,
    KET_R,
    KET_V,
    ChannelParams,
    QPlate,
    apply_cascade,
    attach_spin,
    hybrid_from_pipeline,
    oam_phase_ket,
    post_select_smf,
    projector_oam,
    projector_spin,
    qplate_apply,
    qplate_cascade_spec,
    smf_channel,
    spin_phase_ket,
    spin_unitary,
    waveplate,
)
from smflab.states import OAMSpectrum, SubspaceLabel, post_select_hybrid, spdc_state

from helpers import bell_density, random_unitary

SUB = SubspaceLabel(1, -1)


def single_mode_ket(spin_amp, ell: int, ell_max: int, ell_free: int = 0, ell_max_free: int = 0):
    """Bi-photon ket |spin>|ell> (x) |ell_free> built by hand."""
    from smflab.states import BiPhotonKet

    amps = np.zeros((2, 2 * ell_max + 1, 2 * ell_max_free + 1), dtype=complex)
    amps[:, ell + ell_max, ell_free + ell_max_free] = np.asarray(spin_amp, dtype=complex)
    return BiPhotonKet(amps, ell_max_spin_arm=ell_max, ell_max_free_arm=ell_max_free)


class TestPolarisationConventions:
    def test_basis_orthonormal(self):
        for a, b in ((KET_R, KET_L), (KET_H, KET_V), (KET_D, KET_A)):
            assert abs(np.vdot(a, a) - 1) < 1e-12
            assert abs(np.vdot(b, b) - 1) < 1e-12
            assert abs(np.vdot(a, b)) < 1e-12

    def test_phase_family_hits_canonical_states(self):
        for theta, ket in ((0.0, KET_H), (np.pi / 2, KET_D), (np.pi, KET_V), (3 * np.pi / 2, KET_A)):
            overlap = abs(np.vdot(ket, spin_phase_ket(theta)))
            assert abs(overlap - 1.0) < 1e-12


class TestQPlate:
    def test_half_integer_charge_enforced(self):
        QPlate(0.5)
        QPlate(-1.0)
        with pytest.raises(ValueError, match="integer"):
            QPlate(0.3)
        with pytest.raises(ValueError, match="nonzero"):
            QPlate(0.0)

    def test_r_branch_shift(self):
        # |0>|R> -> |-1>|L>
        ket = single_mode_ket([1.0, 0.0], 0, ell_max=1)
        out = qplate_apply(ket, QPlate(0.5))
        assert abs(out.amplitude(1, -1, 0) - 1.0) < 1e-12
        assert abs(out.amplitude(0, 0, 0)) == 0

    def test_l_branch_shift(self):
        # |0>|L> -> |+1>|R>
        ket = single_mode_ket([0.0, 1.0], 0, ell_max=1)
        out = qplate_apply(ket, QPlate(0.5))
        assert abs(out.amplitude(0, 1, 0) - 1.0) < 1e-12

    def test_norm_preserved_and_involution(self):
        rng = np.random.default_rng(59)
        for _ in range(20):
            amps = rng.normal(size=(2, 7, 3)) + 1j * rng.normal(size=(2, 7, 3))
            amps[:, 0, :] = amps[:, -1, :] = 0.0  # leave room for the shift
            amps /= np.linalg.norm(amps)
            from smflab.states import BiPhotonKet

            ket = BiPhotonKet(amps, ell_max_spin_arm=3, ell_max_free_arm=1)
            plate = QPlate(0.5)
            once = qplate_apply(ket, plate)
            assert abs(np.sum(np.abs(once.amplitudes) ** 2) - 1.0) < 1e-12
            twice = qplate_apply(once, plate)
            assert np.max(np.abs(twice.amplitudes - ket.amplitudes)) < 1e-12

    def test_window_overflow_rejected_with_requirement(self):
        ket = single_mode_ket([1.0, 0.0], -1, ell_max=1)  # |-1>|R> would go to -2
        with pytest.raises(ValueError, match="ell_max_spin_arm >= 2"):
            qplate_apply(ket, QPlate(0.5))

    def test_free_arm_rejected(self):
        ket = single_mode_ket([1.0, 0.0], 0, ell_max=1)
        with pytest.raises(ValueError, match="spin arm"):
            qplate_apply(ket, QPlate(0.5), arm="free")


class TestWaveplate:
    def test_qwp_at_zero_fixes_h(self):
        u = waveplate("QWP", 0.0).jones
        out = u @ KET_H
        assert abs(abs(np.vdot(KET_H, out)) - 1.0) < 1e-12

    def test_hwp_at_45_swaps_h_v(self):
        u = waveplate("HWP", np.pi / 4).jones
        assert abs(abs(np.vdot(KET_V, u @ KET_H)) - 1.0) < 1e-12
        assert abs(abs(np.vdot(KET_H, u @ KET_V)) - 1.0) < 1e-12

    def test_qwp_at_45_maps_circular_to_linear(self):
        # fixes the sign convention: R -> H exactly
        u = waveplate("QWP", np.pi / 4).jones
        assert abs(abs(np.vdot(KET_H, u @ KET_R)) - 1.0) < 1e-12
        assert abs(np.vdot(KET_H, u @ KET_L)) < 1e-12
        assert abs(abs(np.vdot(KET_V, u @ KET_L)) - 1.0) < 1e-12

    def test_hwp_at_zero_swaps_circular(self):
        u = waveplate("HWP", 0.0).jones
        assert np.max(np.abs(u - np.array([[0, 1], [1, 0]]))) < 1e-12

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            waveplate("TWP", 0.0)

    def test_unitary_across_angles(self):
        for kind in ("QWP", "HWP"):
            for angle in np.linspace(0, np.pi, 13):
                u = waveplate(kind, angle).jones
                assert np.max(np.abs(u @ u.conj().T - np.eye(2))) < 1e-10


class TestCascade:
    def test_target_1_is_single_plate(self):
        seq = qplate_cascade_spec(1)
        assert len(seq) == 1 and isinstance(seq[0], QPlate)

    def test_target_2_structure(self):
        seq = qplate_cascade_spec(2)
        assert len(seq) == 3
        assert isinstance(seq[0], QPlate) and isinstance(seq[2], QPlate)
        assert seq[1].label.startswith("HWP")

    def test_target_2_composed_algebra(self):
        # |0>|L> ends at OAM index +2
        ket = single_mode_ket([0.0, 1.0], 0, ell_max=2)
        out = apply_cascade(ket, qplate_cascade_spec(2))
        weight_plus2 = abs(out.amplitude(0, 2, 0)) ** 2 + abs(out.amplitude(1, 2, 0)) ** 2
        assert abs(weight_plus2 - 1.0) < 1e-12
        # and |0>|R> ends at -2
        ket = single_mode_ket([1.0, 0.0], 0, ell_max=2)
        out = apply_cascade(ket, qplate_cascade_spec(2))
        weight_minus2 = abs(out.amplitude(0, -2, 0)) ** 2 + abs(out.amplitude(1, -2, 0)) ** 2
        assert abs(weight_minus2 - 1.0) < 1e-12

    def test_two_plates_without_hwp_cancel(self):
        ket = single_mode_ket([1.0, 0.0], 0, ell_max=2)
        out = qplate_apply(qplate_apply(ket, QPlate(0.5)), QPlate(0.5))
        assert abs(abs(out.amplitude(0, 0, 0)) - 1.0) < 1e-12

    def test_unsupported_target_rejected(self):
        with pytest.raises(ValueError, match="target_ell"):
            qplate_cascade_spec(3)


class TestPipeline:
    def test_matches_direct_construction_target_1(self):
        got = hybrid_from_pipeline(OAMSpectrum.uniform(2), 1)
        want = post_select_hybrid(SubspaceLabel(1, -1))
        assert got.subspace == SubspaceLabel(1, -1)
        assert np.max(np.abs(got.rho - want.rho)) < 1e-12

    def test_matches_direct_construction_target_2(self):
        got = hybrid_from_pipeline(OAMSpectrum.uniform(3), 2)
        assert got.subspace == SubspaceLabel(2, -2)
        assert abs(concurrence(got.rho) - 1.0) < 1e-10
        assert np.max(np.abs(got.rho - bell_density())) < 1e-12

    def test_spectrum_insensitivity_after_post_selection(self):
        uniform = hybrid_from_pipeline(OAMSpectrum.uniform(2), 1)
        gauss = hybrid_from_pipeline(OAMSpectrum.gaussian(2, width=1.3), 1)
        assert np.max(np.abs(uniform.rho - gauss.rho)) < 1e-12

    def test_post_select_requires_support(self):
        ket = attach_spin(spdc_state(OAMSpectrum.uniform(2)), "H", ell_max_spin=3)
        ket = qplate_apply(ket, QPlate(0.5))
        # a single plate leaves the fibre slice paired with free-arm +-1 only
        from smflab.linalg import NumericalError

        with pytest.raises(NumericalError, match="no support"):
            post_select_smf(ket, SubspaceLabel(2, -2))

    def test_subspace_outside_window_rejected(self):
        ket = attach_spin(spdc_state(OAMSpectrum.uniform(1)), "H", ell_max_spin=2)
        with pytest.raises(ValueError, match="outside the free-arm window"):
            post_select_smf(ket, SubspaceLabel(3, -3))


class TestSmfChannel:
    def test_identity_params_leave_state(self):
        state = post_select_hybrid(SUB)
        out = smf_channel(state, ChannelParams())
        assert np.max(np.abs(out.rho - state.rho)) < 1e-12

    def test_calibrated_fidelity(self):
        state = post_select_hybrid(SUB)
        out = smf_channel(state, ChannelParams(werner_p=(4 * 0.90 - 1) / 3))
        assert abs(fidelity(state.rho, out.rho) - 0.90) < 1e-9

    def test_rotation_preserves_concurrence(self):
        state = post_select_hybrid(SUB)
        rng = np.random.default_rng(61)
        for _ in range(20):
            angles = rng.uniform(-np.pi, np.pi, size=3)
            out = smf_channel(state, ChannelParams(werner_p=1.0, birefringence_angles=tuple(angles)))
            assert abs(concurrence(out.rho) - 1.0) < 1e-9

    def test_density_contract_on_parameter_grid(self):
        state = post_select_hybrid(SUB)
        for p in np.linspace(0, 1, 5):
            for alpha in np.linspace(-np.pi, np.pi, 5):
                for beta in np.linspace(0, np.pi, 4):
                    out = smf_channel(state, ChannelParams(p, (alpha, beta, 0.7)))
                    assert validate_density(out.rho).passed

    def test_spin_unitary_is_unitary(self):
        rng = np.random.default_rng(67)
        for _ in range(25):
            u = spin_unitary(rng.uniform(-np.pi, np.pi, size=3))
            assert np.max(np.abs(u @ u.conj().T - np.eye(2))) < 1e-12


class TestProjectors:
    def test_r_projector(self):
        p = projector_spin("R")
        assert np.max(np.abs(p - np.diag([1.0, 0.0]))) < 1e-12
        assert np.max(np.abs(p @ p - p)) < 1e-12

    def test_h_projector_from_definition(self):
        want = np.outer(KET_H, KET_H.conj())
        assert np.max(np.abs(projector_spin("H") - want)) < 1e-12

    def test_qwp_then_polarizer_composition(self):
        qwp = waveplate("QWP", np.pi / 4)
        got = projector_spin("H", elements=(qwp,))
        u = qwp.jones
        want = u.conj().T @ np.outer(KET_H, KET_H.conj()) @ u
        assert np.max(np.abs(got - want)) < 1e-12

    def test_oam_eigenstate_projectors(self):
        assert np.array_equal(projector_oam("ell1"), np.diag([1.0, 0.0]).astype(complex))
        assert np.array_equal(projector_oam("ell2"), np.diag([0.0, 1.0]).astype(complex))

    def test_oam_theta_zero_all_half(self):
        assert np.max(np.abs(projector_oam(0.0) - 0.5 * np.ones((2, 2)))) < 1e-12

    def test_oam_theta_half_pi_off_diagonals(self):
        p = projector_oam(np.pi / 2)
        assert abs(p[0, 1] - (-0.5j)) < 1e-12
        assert abs(p[1, 0] - 0.5j) < 1e-12
        assert np.max(np.abs(p @ p - p)) < 1e-12

    def test_unknown_labels_rejected(self):
        with pytest.raises(ValueError, match="polarisation"):
            projector_spin("Q")
        with pytest.raises(ValueError, match="OAM"):
            projector_oam("ell3")

    def test_phase_projector_matches_ket(self):
        rng = np.random.default_rng(71)
        for theta in rng.uniform(0, 2 * np.pi, size=10):
            ket = oam_phase_ket(theta)
            assert np.max(np.abs(projector_oam(float(theta)) - np.outer(ket, ket.conj()))) < 1e-12


class TestAttachSpin:
    def test_window_padding(self):
        ket = attach_spin(spdc_state(OAMSpectrum.uniform(1)), "H", ell_max_spin=3)
        assert ket.amplitudes.shape == (2, 7, 3)
        assert abs(np.sum(np.abs(ket.amplitudes) ** 2) - 1.0) < 1e-12

    def test_window_cannot_shrink(self):
        with pytest.raises(ValueError, match="smaller"):
            attach_spin(spdc_state(OAMSpectrum.uniform(2)), "H", ell_max_spin=1)

    def test_unknown_spin_rejected(self):
        with pytest.raises(ValueError, match="spin"):
            attach_spin(spdc_state(OAMSpectrum.uniform(1)), "X")


class TestLocalUnitaryInvariance:
    def test_concurrence_invariant_under_random_locals(self):
        rng = np.random.default_rng(73)
        state = post_select_hybrid(SUB)
        from smflab.linalg import tensor_product

        for _ in range(25):
            u = tensor_product(random_unitary(rng, 2), random_unitary(rng, 2))
            rho = u @ state.rho @ u.conj().T
            assert abs(concurrence(rho) - concurrence(state.rho)) < 1e-9
