"""Temporally consistent action segmentation via fused unbalanced optimal transport.

The solver decodes a segmentation from a noisy frame/action cost matrix
by trading visual matching cost against a banded temporal-structure
objective, with a KL penalty that lets videos use only a subset of
actions.  Around it: cost construction, a self-training pipeline that
learns an encoder from solver pseudo-labels, the standard unsupervised
evaluation protocol, a synthetic dataset generator, file formats, an
HTTP service and a CLI.
"""

from .costs import (
    CostSet,
    add_temporal_prior,
    band_width,
    build_kot_cost,
    gw_structure_apply,
    logits_to_cost,
    temporal_prior,
)
from .data_io import (
    SynthDataset,
    SynthSpec,
    read_features,
    read_labels,
    synth_generate,
    write_features,
    write_labels,
)
from .errors import (
    BadMagicError,
    DegenerateInputError,
    FeatureFileError,
    InvalidInputError,
    LabelParseError,
    NonFiniteDataError,
    NumericalError,
    OtsegError,
    TruncatedPayloadError,
)
from .learn import (
    EncoderState,
    TrainConfig,
    TrainReport,
    adam_step,
    ce_loss_and_grads,
    forward,
    kmeans_init,
    sample_frames,
    segment_videos,
    soft_assign,
    train,
)
from .metrics import EvalResult, edit_distance, evaluate, f1_at_tau, f1_segment, hungarian
from .segmentation import Segmentation, decode, run_length_encode, segment_count, to_pseudo_labels
from .solver import SolveReport, SolverConfig, TransportPlan, gradient, objective, solve, solve_batch

__version__ = "0.1.0"
