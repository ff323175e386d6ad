"""Simple contextual neural networks: exact construction, gradient training,
and the contextual-regression simulation study."""

from .backends import BACKEND_NAME
from .construction import ConstructionReport, construct_exact, sup_abs_linear, verify_construction
from .experiment import (
    ExperimentConfig,
    RosterModel,
    default_config,
    excess_mse,
    run_experiment,
    run_simulation,
    summarize,
)
from .model import (
    ContextualLinearModel,
    LabeledDataset,
    RegressorDomain,
    context_of,
    evaluate_true,
    generate_dataset,
    sample_random_model,
)
from .networks import (
    FeedForwardParams,
    FeedForwardSpec,
    GateMode,
    SCtxtNNParams,
    SCtxtNNSpec,
    forward_feedforward,
    forward_sctxtnn,
    init_random,
    param_count,
)
from .rng import RandomSource
from .training import AdamState, TrainingRecord, adam_step, gradient, mse, train

__version__ = "0.1.0"
