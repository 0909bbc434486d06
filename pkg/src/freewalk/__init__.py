"""Random walks on the fusion monoid of two self-conjugate letters: exact
kernels, Monte-Carlo boundary estimation, diagrammatic operator spaces and
the harmonic-element calculus on top of them."""

from .words import (
    ALPHA,
    BETA,
    EPSILON,
    FusionTerm,
    Word,
    alternating_word,
    all_words,
    common_prefix,
    conjugate_letter,
    fuse,
    fusion_summands,
    involution,
    is_alternating,
    run_lengths,
    runs,
    split_at,
)
from .qdims import (
    AlternatingTail,
    DimValue,
    GenericTail,
    QParam,
    Q_TO_ONE,
    TailSpec,
    dim_min,
    dim_q,
    finite_tail_ratio,
    log_dim_q,
    log_q_int,
    martin_ratio_limit,
    q_int,
)
from .walk import (
    BudgetExceeded,
    ProbMeasure,
    SplitMix64,
    TransitionRow,
    TruncatedKernel,
    convolution_power,
    convolve,
    is_generating,
    n_step,
    rho,
    sample_path,
    transition_row,
)
from .boundary import (
    AtomScanReport,
    ConvolutieReport,
    Cylinder,
    EstimationError,
    HittingEstimate,
    PrefixSample,
    StoppingPolicy,
    atom_scan,
    convolutie_check,
    estimate_hitting,
    estimate_hitting_many,
    poisson_integral_classical,
    sample_boundary_prefix,
    sample_boundary_prefixes,
)

__version__ = "0.1.0"
