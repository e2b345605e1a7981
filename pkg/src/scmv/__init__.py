"""Subspace co-regularized multi-view learning for two-view binary classification."""

from .dataset import (
    LabeledRows,
    SynthConfig,
    TwoViewDataset,
    load_dataset,
    save_dataset,
    split_train_test,
    synth_generate,
)
from .errors import DatasetFormatError, ModelFormatError, NumericalError, ScmvError, ValidationError
from .model import ScmvModel, load_model, predict, predict_view, recover_weights, save_model, train
from .objective import Hyperparams, ProblemData, SubspacePair, gradient, objective, precompute
from .stiefel import OptimizerConfig, StopReason, init_orthonormal, optimize
from .tfidf import Vocabulary, featurize_corpus

__version__ = "0.1.0"
