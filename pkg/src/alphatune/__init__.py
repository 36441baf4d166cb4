"""Domain adaptation by loss reweighting with a tuned target/source mix."""

from .dataset import (
    Dataset,
    SyntheticConfig,
    downsample,
    generate_synthetic,
    kfold_indices,
    load_table,
    split_train_test,
)
from .errors import ConfigError, FormatError, ValidationError
from .linmodel import LinearModel, TrainConfig, TrainStats, accuracy, predict, train_sgd, weighted_loss
from .reweight import AlphaProblem, alpha_weights, empirical_alpha_error, train_at_alpha
from .search import (
    AlphaEvaluator,
    SearchReport,
    cv_accuracy,
    find_bracket,
    find_weighting,
    golden_section_search,
    grid_search,
    random_search,
)

__version__ = "0.1.0"
