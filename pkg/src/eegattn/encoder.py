"""Stage 1: denoising recurrent autoencoder with channel attention.

The encoder runs an LSTM over the multichannel window (hidden width = the
channel count), projects each hidden state down to the latent width, and
applies channel attention over the latent features — the time dimension is
preserved, so a (T, C) window maps to a (T, L) latent sequence. The decoder
is a second LSTM mapping the latent sequence back to (T, C).

Training is unsupervised: corrupt the input with additive white Gaussian
noise at unity SNR, reconstruct the clean window, minimise the MSE.

Also here: the PCA baseline encoder used for latent-subspace comparisons.
"""

from dataclasses import dataclass

import numpy as np

from . import layers
from .autodiff import Tensor
from .checkpoint import load_tensors, save_tensors
from .errors import ConfigError, ShapeError
from .optim import Adam


@dataclass
class AutoencoderConfig:
    channels: int
    latent_dims: int = 8

    def validate(self):
        if self.channels < 1:
            raise ConfigError("autoencoder needs at least one channel")
        if self.latent_dims < 1:
            raise ConfigError("latent_dims must be positive")
        if self.latent_dims > self.channels:
            raise ConfigError(
                f"latent_dims {self.latent_dims} exceeds channel count {self.channels}")


@dataclass
class AutoencoderModel:
    config: AutoencoderConfig
    enc_lstm: layers.LstmParams   # (C -> hidden C)
    enc_proj: layers.DenseParams  # (C -> L)
    attention: layers.AttentionParams  # length L
    dec_lstm: layers.LstmParams   # (L -> hidden C)

    def parameters(self):
        return (self.enc_lstm.tensors() + self.enc_proj.tensors()
                + self.attention.tensors() + self.dec_lstm.tensors())

    def named_tensors(self):
        return {
            "enc_lstm.wx": self.enc_lstm.wx,
            "enc_lstm.wh": self.enc_lstm.wh,
            "enc_lstm.b": self.enc_lstm.b,
            "enc_proj.w": self.enc_proj.w,
            "enc_proj.b": self.enc_proj.b,
            "attention.w": self.attention.w,
            "dec_lstm.wx": self.dec_lstm.wx,
            "dec_lstm.wh": self.dec_lstm.wh,
            "dec_lstm.b": self.dec_lstm.b,
        }

    def parameter_count(self):
        return layers.count_parameters(self.parameters())


def build_autoencoder(config, rng, dtype=np.float32):
    config.validate()
    c, lat = config.channels, config.latent_dims
    return AutoencoderModel(
        config=config,
        enc_lstm=layers.init_lstm(rng, c, c, dtype),
        enc_proj=layers.init_dense(rng, c, lat, dtype),
        attention=layers.init_attention(rng, lat, dtype),
        dec_lstm=layers.init_lstm(rng, lat, c, dtype),
    )


def encode(model, x):
    """Map a (T, C) window to its (T, L) latent sequence."""
    if not isinstance(x, Tensor):
        x = Tensor(x)
    if x.ndim != 2 or x.shape[1] != model.config.channels:
        raise ShapeError(
            f"expected (T, {model.config.channels}) input, got {x.shape}")
    hidden = layers.lstm_forward(x, model.enc_lstm)
    projected = layers.dense(hidden, model.enc_proj)
    return layers.channel_attention(projected, model.attention)


def decode(model, latent):
    if latent.shape[1] != model.config.latent_dims:
        raise ShapeError(
            f"expected (T, {model.config.latent_dims}) latent, got {latent.shape}")
    return layers.lstm_forward(latent, model.dec_lstm)


def autoencoder_forward(model, x_noisy):
    """Full pass: returns (latent (T, L), reconstruction (T, C))."""
    latent = encode(model, x_noisy)
    return latent, decode(model, latent)


def add_awgn(x, rng):
    """Corrupt a (T, C) window so each channel's SNR is one.

    Noise variance per channel equals that channel's empirical power over
    the window; silent channels stay untouched.
    """
    x = np.asarray(x)
    power = (x * x).mean(axis=0)
    noise = rng.standard_normal(x.shape) * np.sqrt(power)
    return (x + noise.astype(x.dtype)).astype(x.dtype, copy=False)


def reconstruction_loss(clean, recon):
    """Mean squared error over all entries."""
    if not isinstance(clean, Tensor):
        clean = Tensor(np.asarray(clean, dtype=recon.dtype))
    if clean.shape != recon.shape:
        raise ShapeError(f"shape mismatch {clean.shape} vs {recon.shape}")
    diff = recon - clean
    return (diff * diff).mean()


@dataclass
class AutoencoderTrainConfig:
    # batch of 4 keeps the Adam step count high enough at lr=0.001 for the
    # reconstruction loss to halve within a ~20 epoch budget at desk scale
    epochs: int = 50
    batch_size: int = 4
    learning_rate: float = 0.001


def train_autoencoder(windows, config, train_config=None, seed=0):
    """Fit the denoising autoencoder on a list of (T, C) windows.

    Unsupervised: no labels are consumed. Fresh noise is drawn for every
    window in every epoch. Returns (model, per-epoch mean losses) where
    entry 0 is the pre-training loss of the freshly initialised model.
    """
    if train_config is None:
        train_config = AutoencoderTrainConfig()
    windows = [np.asarray(w, dtype=np.float32) for w in windows]
    if not windows:
        raise ConfigError("empty training set")
    shape = windows[0].shape
    for w in windows:
        if w.shape != shape:
            raise ShapeError(f"non-uniform window shapes: {w.shape} vs {shape}")
    config.validate()
    if shape[1] != config.channels:
        raise ShapeError(
            f"windows have {shape[1]} channels, config says {config.channels}")

    rng = np.random.default_rng(seed)
    model = build_autoencoder(config, rng)
    opt = Adam(model.parameters(), lr=train_config.learning_rate)

    # epoch-0 reference: evaluate the untrained model once
    losses = [_epoch_eval(model, windows, rng)]

    order = np.arange(len(windows))
    for _ in range(train_config.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start:start + train_config.batch_size]
            opt.zero_grad()
            for idx in batch:
                clean = windows[idx]
                noisy = add_awgn(clean, rng)
                _, recon = autoencoder_forward(model, Tensor(noisy))
                loss = reconstruction_loss(clean, recon)
                epoch_loss += loss.item()
                (loss * (1.0 / len(batch))).backward()
            opt.step()
        losses.append(epoch_loss / len(order))
    return model, losses


def _epoch_eval(model, windows, rng):
    total = 0.0
    for clean in windows:
        noisy = add_awgn(clean, rng)
        _, recon = autoencoder_forward(model, Tensor(noisy))
        total += reconstruction_loss(clean, recon).item()
    return total / len(windows)


def save_autoencoder(model, path):
    save_tensors(path, model.named_tensors())


def load_autoencoder(path):
    named = load_tensors(path)
    c = named["enc_lstm.wx"].shape[0]
    lat = named["enc_proj.w"].shape[1]
    model = build_autoencoder(AutoencoderConfig(channels=c, latent_dims=lat),
                              np.random.default_rng(0))
    for name, tensor in model.named_tensors().items():
        arr = named[name]
        if arr.shape != tensor.data.shape:
            raise ShapeError(f"checkpoint tensor {name} has shape {arr.shape}, "
                             f"expected {tensor.data.shape}")
        tensor.data = arr.copy()
    return model


# -- PCA baseline -----------------------------------------------------------------


@dataclass
class PcaModel:
    mean: np.ndarray        # (C,)
    components: np.ndarray  # (C, L), orthonormal columns


def pca_fit(windows, latent_dims):
    """Top-L eigenvectors of the channel covariance over pooled timesteps."""
    if isinstance(windows, np.ndarray):
        windows = [windows]
    stacked = np.concatenate([np.asarray(w, dtype=np.float64) for w in windows],
                             axis=0)
    n, c = stacked.shape
    if n < c:
        raise ConfigError(f"need at least {c} pooled timesteps, got {n}")
    if latent_dims > c:
        raise ConfigError(f"latent_dims {latent_dims} exceeds channel count {c}")
    mean = stacked.mean(axis=0)
    centered = stacked - mean
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:latent_dims]
    components = eigvecs[:, order]
    # fix signs so the largest-magnitude entry of each component is positive
    for j in range(components.shape[1]):
        k = np.argmax(np.abs(components[:, j]))
        if components[k, j] < 0:
            components[:, j] = -components[:, j]
    return PcaModel(mean=mean, components=np.ascontiguousarray(components))


def pca_transform(x, model):
    x = np.asarray(x, dtype=np.float64)
    return (x - model.mean) @ model.components


def pca_inverse_transform(z, model):
    return np.asarray(z, dtype=np.float64) @ model.components.T + model.mean
