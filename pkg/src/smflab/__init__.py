"""smflab: a numerical lab for hybrid spin-orbit entanglement through fibre.

An OAM-entangled photon pair source, a q-plate interface that maps orbital
angular momentum onto polarisation, a single-mode-fibre link with isotropic
noise, and the analyses used to characterize transported entanglement:
conditional mode spectra, overcomplete state tomography, CHSH tests and a
which-path quantum eraser.
"""

from .config import ConfigError, ExperimentConfig, TableRow, config_hash, load_config
from .linalg import (
    DensityReport,
    HermEigen,
    NumericalError,
    eigen_hermitian,
    partial_trace,
    psd_sqrt,
    tensor_product,
    validate_density,
)
from .measurement import (
    CoincidenceRecord,
    MeasurementSetting,
    bell_curve,
    detection_probability,
    eraser_scan,
    mode_spectrum,
    simulate_counts,
)
from .metrics import (
    MetricReport,
    chsh_expectation,
    chsh_from_counts,
    concurrence,
    fidelity,
    normalized_metrics,
    purity,
    visibility,
)
from .optics import (
    ChannelParams,
    QPlate,
    SpinElement,
    apply_cascade,
    attach_spin,
    hybrid_from_pipeline,
    post_select_smf,
    projector_oam,
    projector_spin,
    qplate_apply,
    qplate_cascade_spec,
    smf_channel,
    waveplate,
)
from .states import (
    BiPhotonKet,
    HybridState,
    MultiDimState,
    OAMSpectrum,
    SpdcKet,
    SubspaceLabel,
    apply_werner,
    multidim_mixture,
    post_select_hybrid,
    reduce_oam_photon,
    spdc_state,
    werner_p_for_fidelity,
)
from .tomography import (
    ReconstructionResult,
    TomographySet,
    project_to_physical,
    reconstruct_from_probabilities,
    reconstruct_linear,
    standard_settings,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
