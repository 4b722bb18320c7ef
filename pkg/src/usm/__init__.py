"""Universal sparse modeling: heavy-tailed priors, reweighted-l1 coding,
incoherent dictionary learning, and codelength-based model assessment."""

from .coder import (
    CodeOptions,
    CodeResult,
    constrained_code,
    constrained_code_columns,
    kkt_max_violation,
    lla_code,
    lla_code_columns,
    lla_init_magnitude,
    objective,
    objective_columns,
    omp,
    omp_columns,
    scalar_threshold,
    soft_threshold,
    weighted_l1,
    weighted_l1_columns,
    zeta_moe,
)
from .data import (
    FormatError,
    PatchGeometry,
    PatchSet,
    extract_patches,
    psnr,
    read_matrix,
    read_pgm,
    reassemble,
    write_matrix,
    write_pgm,
)
from .dictlearn import (
    LearnOptions,
    LearnResult,
    dict_gradient,
    dict_objective,
    dict_update,
    incoherence,
    init_dictionary,
    learn,
    overcomplete_dct_dictionary,
)
from .empirics import (
    DEFAULT_DELTA,
    FitReport,
    FitRow,
    QuantHist,
    codelength_bits,
    entropy_bits,
    fit_report,
    kld_bits,
    quantize_hist,
    regret_bits,
)
from .experiments import (
    DenoiseResult,
    RecoveryConfig,
    RecoveryReport,
    RecoveryRow,
    classify,
    classify_columns,
    denoise_image,
    estimated_support,
    gen_class_data,
    gen_sparse_instances,
    run_recovery,
    support_error,
    synth_texture_image,
)
from .priors import (
    EstimationError,
    Joe,
    Laplacian,
    Moe,
    PriorModel,
    cmoe_from_samples,
    joe_fit_fixed_ratio,
    joe_fit_moments,
    laplacian_mle,
    moe_fit_moments,
    moe_fit_samples,
)

__version__ = "0.1.0"

__all__ = [
    "CodeOptions",
    "CodeResult",
    "DEFAULT_DELTA",
    "DenoiseResult",
    "EstimationError",
    "FitReport",
    "FitRow",
    "FormatError",
    "Joe",
    "Laplacian",
    "LearnOptions",
    "LearnResult",
    "Moe",
    "PatchGeometry",
    "PatchSet",
    "PriorModel",
    "QuantHist",
    "RecoveryConfig",
    "RecoveryReport",
    "RecoveryRow",
    "classify",
    "classify_columns",
    "cmoe_from_samples",
    "codelength_bits",
    "constrained_code",
    "constrained_code_columns",
    "denoise_image",
    "dict_gradient",
    "dict_objective",
    "dict_update",
    "entropy_bits",
    "estimated_support",
    "extract_patches",
    "fit_report",
    "gen_class_data",
    "gen_sparse_instances",
    "incoherence",
    "init_dictionary",
    "joe_fit_fixed_ratio",
    "joe_fit_moments",
    "kkt_max_violation",
    "kld_bits",
    "laplacian_mle",
    "learn",
    "lla_code",
    "lla_code_columns",
    "lla_init_magnitude",
    "moe_fit_moments",
    "moe_fit_samples",
    "objective",
    "objective_columns",
    "omp",
    "omp_columns",
    "overcomplete_dct_dictionary",
    "psnr",
    "quantize_hist",
    "read_matrix",
    "read_pgm",
    "reassemble",
    "regret_bits",
    "run_recovery",
    "scalar_threshold",
    "soft_threshold",
    "support_error",
    "synth_texture_image",
    "weighted_l1",
    "weighted_l1_columns",
    "write_matrix",
    "write_pgm",
    "zeta_moe",
]
