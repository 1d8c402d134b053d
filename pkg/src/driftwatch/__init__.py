"""Entropy-triggered retraining benchmarks for drifting data streams."""

from .alarm import EwmaConfig, EwmaState, ewma_reset, ewma_update
from .core import DriftStream, StreamBatch, split_batch
from .density import KdeModel, fit_kde, kl_estimate, log_density
from .model import LinearClassifier, Normalizer, TrainConfig, fit_normalizer, log_loss, predict_proba, train_logistic
from .policies import PolicyKind, PolicyRunResult, RunConfig, compare_policies, run_policy
from .streams import CsvStreamConfig, SyntheticDriftConfig, csv_stream, synthetic_stream

__version__ = "0.1.0"
