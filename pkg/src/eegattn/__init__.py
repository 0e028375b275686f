"""eegattn: subject-independent EEG classification from scratch.

Stage 1 is a denoising recurrent autoencoder with channel attention that
maps raw multichannel windows to low-dimensional latent sequences; stage 2
is a CNN-with-attention classifier over those sequences. The package also
ships the leave-one-subject-out harness, an interchange container codec, a
strict EDF reader, attention/latent analysis tools and a CLI.
"""

from .autodiff import Tensor, concatenate, matmul, softmax
from .backend import BACKEND_NAME
from .classifier import (
    ActivationCapture, ClassifierConfig, ClassifierModel, ClassifierTrainConfig,
    build_classifier, classifier_forward, train_classifier,
)
from .dataio import (
    Annotation, EEGRecording, LabeledWindow, label_deap, read_container,
    read_edf, seed_central_crop, segment_chb, write_container,
)
from .encoder import (
    AutoencoderConfig, AutoencoderModel, AutoencoderTrainConfig, PcaModel,
    add_awgn, autoencoder_forward, build_autoencoder, encode, pca_fit,
    pca_transform, reconstruction_loss, train_autoencoder,
)
from .loso import (
    FoldResult, PipelineConfig, RunSummary, loso_split, run_loso,
    seed_session_average,
)
from .optim import Adam

__version__ = "0.1.0"

__all__ = [
    "ActivationCapture", "Adam", "Annotation", "AutoencoderConfig",
    "AutoencoderModel", "AutoencoderTrainConfig", "BACKEND_NAME",
    "ClassifierConfig", "ClassifierModel", "ClassifierTrainConfig",
    "EEGRecording", "FoldResult", "LabeledWindow", "PcaModel",
    "PipelineConfig", "RunSummary", "Tensor", "add_awgn",
    "autoencoder_forward", "build_autoencoder", "build_classifier",
    "classifier_forward", "concatenate", "encode", "label_deap",
    "loso_split", "matmul", "pca_fit", "pca_transform", "read_container",
    "read_edf", "reconstruction_loss", "run_loso", "seed_central_crop",
    "seed_session_average", "segment_chb", "softmax", "train_autoencoder",
    "train_classifier", "write_container",
]
