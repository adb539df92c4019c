"""Two-stage monotone models of human pairwise choice."""

__version__ = "0.1.0"

from .errors import DatasetError, FitError, LinkError, ModelFormatError, SchemaError, TwoStageError
from .links import Link, complete_transitive, link_eval, link_inverse
from .schema import (
    Alternative,
    ComparisonDataset,
    ComparisonRecord,
    FeatureSchema,
    FeatureSpec,
    parse_dataset,
    serialize_dataset,
    split_dataset,
    validate_schema,
)
from .model import (
    Choice,
    TwoStageModel,
    export_editing_curves,
    export_model,
    import_model,
    inner_score,
    predict_choice,
    predict_prob,
    rank_distribution,
    zero_model,
)
from .fit import FitConfig, MonotoneParams, fit_tables, loss_and_gradient, select_context
from .synth import SimulatedDM, bayes_accuracy, dm_prob, simulate_dataset, synthetic_schema
from .baselines import LinearModel, fit_symmetric_logistic, predict_linear, tallying_predict
from .axioms import check_complementarity, check_compositionality, check_monotonicity, check_sigma_transitivity
from .evaluation import accuracy, benchmark
