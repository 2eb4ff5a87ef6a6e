"""seizlearn: streaming EEG seizure detection with unsupervised online
logistic-regression updates and a hardware-faithful Q6.10 fixed-point
backend."""

__version__ = "0.1.0"

from .classifier import (DetectorModel, LogisticLUT, Prediction, build_lut,
                         classify, logistic_exact)
from .data import (EEGRecord, SynthConfig, load_model, read_annotations, read_csv,
                   read_edf, save_model, synth_generate, write_annotations, write_csv)
from .dsp import (BandDesign, BandpassFilter, BiquadCoeffs, default_filter_bank,
                  frequency_response, verify_filter_bank)
from .evaluation import EvalConfig, MetricsReport, compare, cumulative_sensitivity, evaluate
from .features import FeatureExtractor, FeatureScaling, FeatureVector, window_length
from .online import GatingState, Hyperparams, OnlineClassifier, gate, sgd_update
from .pipeline import RunResult, compute_features, run_record
from .train import SplitSpec, TrainConfig, balance_mask, fit_offline, split, train_model, tune

__all__ = [
    "BandDesign", "BandpassFilter", "BiquadCoeffs", "DetectorModel", "EEGRecord",
    "EvalConfig", "FeatureExtractor", "FeatureScaling", "FeatureVector", "GatingState",
    "Hyperparams", "LogisticLUT", "MetricsReport", "OnlineClassifier", "Prediction",
    "RunResult", "SplitSpec", "SynthConfig", "TrainConfig", "balance_mask", "build_lut",
    "classify", "compare", "compute_features", "cumulative_sensitivity",
    "default_filter_bank", "evaluate", "fit_offline", "frequency_response", "gate",
    "load_model", "logistic_exact", "read_annotations", "read_csv", "read_edf",
    "run_record", "save_model", "sgd_update", "split", "synth_generate", "train_model",
    "tune", "verify_filter_bank", "window_length", "write_annotations", "write_csv",
]
