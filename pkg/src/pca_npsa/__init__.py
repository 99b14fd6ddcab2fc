"""PCA phase demodulation of nonuniformly phase-shifted fringes, with
frequency-transfer-function analysis of the resulting quadrature filters."""

from .demod import (
    DemodCoefficients,
    ErrorStats,
    corrected_coefficients,
    correction_ratio,
    demodulate,
    lissajous,
    phase,
    phase_error,
    plain_coefficients,
)
from .errors import (
    ConvergenceError,
    DegenerateDataError,
    InvalidInputError,
    NpsaError,
    StackFormatError,
)
from .fringe_synth import (
    PAPER3_STEPS,
    PAPER9_STEPS,
    FringeStack,
    HarmonicSpec,
    NoiseSpec,
    PhaseSteps,
    Scene,
    make_scene,
    sample_fringes,
)
from .oracle import empirical_snr_gain, estimate_steps, lsq_demodulate
from .pca_core import PcaBasis, covariance, estimate_background, pca_basis, symmetric_eig
from .pipeline import PcaDemodulation, run_pca
from .spectral import (
    FtfReport,
    detuning_ratio,
    ftf,
    harmonic_robustness,
    predict_detuning_field,
    quadrature_check,
    snr_gain,
)

__version__ = "0.1.0"
