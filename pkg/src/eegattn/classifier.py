"""Stage 2: CNN-with-attention classifier over latent sequences.

Two parallel convolutional blocks read the (T, L) latent sequence — a short
kernel for nearby structure, two long-kernel layers for long-range structure.
Each conv is followed by instance norm, PReLU and dropout; each block ends in
a pool-2 max pool. The pooled blocks are concatenated on the feature axis,
passed through a highway block and another pool-2 max pool, then through the
split-feature time attention (scores half / values half), a dense + instance
norm head, and a final dense layer over the flattened sequence producing the
class logits. Softmax is applied at loss time, not inside the forward pass.
"""

from dataclasses import dataclass

import numpy as np

from . import layers
from .autodiff import Tensor, concatenate
from .checkpoint import load_tensors, save_tensors
from .errors import ConfigError, ShapeError
from .optim import Adam


@dataclass
class ClassifierConfig:
    timesteps: int
    features: int
    classes: int = 2
    block1_filters: int = 128
    block1_kernel: int = 5
    block2_filters: tuple = (256, 512)
    block2_kernel: int = 11
    dense_width: int = 256
    dropout: float = 0.2
    pool: int = 2

    @property
    def concat_features(self):
        return self.block1_filters + self.block2_filters[1]

    @property
    def output_timesteps(self):
        return self.timesteps // (self.pool * self.pool)

    @property
    def time_compression(self):
        return self.pool * self.pool

    def validate(self):
        problems = []
        comp = self.pool * self.pool
        if self.timesteps < comp or self.timesteps % comp:
            problems.append(
                f"timesteps ({self.timesteps}) must be divisible by {comp} "
                f"(two pool-{self.pool} stages)")
        if self.features < 1:
            problems.append("features must be positive")
        if self.classes < 2:
            problems.append("classes must be at least 2")
        if self.block1_kernel % 2 == 0 or self.block2_kernel % 2 == 0:
            problems.append(
                f"conv kernels must be odd for symmetric same padding "
                f"(got {self.block1_kernel}, {self.block2_kernel})")
        if len(self.block2_filters) != 2:
            problems.append("block2_filters must list exactly two conv widths")
        if self.concat_features % 2:
            problems.append(
                f"block1_filters + block2_filters[1] ({self.concat_features}) "
                f"must be even so the attention can split the feature axis")
        if not 0.0 <= self.dropout < 1.0:
            problems.append(f"dropout must be in [0, 1), got {self.dropout}")
        if self.dense_width < 1:
            problems.append("dense_width must be positive")
        if problems:
            raise ConfigError("; ".join(problems))


def deap_classifier_config(classes=2):
    return ClassifierConfig(timesteps=8064, features=8, classes=classes)


def seed_classifier_config(classes=2):
    return ClassifierConfig(timesteps=30000, features=16, classes=classes)


@dataclass
class ActivationCapture:
    """Activations around the attention layer of one forward pass."""
    pre_attention: np.ndarray   # (T', concat features)
    post_attention: np.ndarray  # (T', concat features / 2)
    time_compression: int       # input T -> T' reduction factor


@dataclass
class ClassifierModel:
    config: ClassifierConfig
    conv1: layers.Conv1dParams
    eta1: Tensor
    conv2: layers.Conv1dParams
    eta2: Tensor
    conv3: layers.Conv1dParams
    eta3: Tensor
    highway: layers.HighwayParams
    head: layers.DenseParams
    out: layers.DenseParams

    def parameters(self):
        return (self.conv1.tensors() + [self.eta1]
                + self.conv2.tensors() + [self.eta2]
                + self.conv3.tensors() + [self.eta3]
                + self.highway.tensors()
                + self.head.tensors() + self.out.tensors())

    def named_tensors(self):
        return {
            "conv1.w": self.conv1.w, "conv1.b": self.conv1.b, "conv1.eta": self.eta1,
            "conv2.w": self.conv2.w, "conv2.b": self.conv2.b, "conv2.eta": self.eta2,
            "conv3.w": self.conv3.w, "conv3.b": self.conv3.b, "conv3.eta": self.eta3,
            "highway.transform.w": self.highway.transform.w,
            "highway.transform.b": self.highway.transform.b,
            "highway.gate.w": self.highway.gate.w,
            "highway.gate.b": self.highway.gate.b,
            "highway.eta": self.highway.eta,
            "head.w": self.head.w, "head.b": self.head.b,
            "out.w": self.out.w, "out.b": self.out.b,
        }

    def parameter_count(self):
        return layers.count_parameters(self.parameters())


def build_classifier(config, rng, dtype=np.float32):
    config.validate()
    f1 = config.block1_filters
    f2a, f2b = config.block2_filters
    cat = config.concat_features
    flat = config.output_timesteps * config.dense_width
    return ClassifierModel(
        config=config,
        conv1=layers.init_conv1d(rng, config.block1_kernel, config.features, f1, dtype),
        eta1=layers.init_prelu(dtype),
        conv2=layers.init_conv1d(rng, config.block2_kernel, config.features, f2a, dtype),
        eta2=layers.init_prelu(dtype),
        conv3=layers.init_conv1d(rng, config.block2_kernel, f2a, f2b, dtype),
        eta3=layers.init_prelu(dtype),
        highway=layers.init_highway(rng, cat, dtype),
        head=layers.init_dense(rng, cat // 2, config.dense_width, dtype),
        out=layers.init_dense(rng, flat, config.classes, dtype),
    )


def layer_shape_trace(config):
    """Output shape of every stage, computable without building the model."""
    t, f = config.timesteps, config.features
    p = config.pool
    f1 = config.block1_filters
    f2a, f2b = config.block2_filters
    cat = config.concat_features
    return [
        ("input", (t, f)),
        ("block1_conv", (t, f1)),
        ("block1_pool", (t // p, f1)),
        ("block2_conv1", (t, f2a)),
        ("block2_conv2", (t, f2b)),
        ("block2_pool", (t // p, f2b)),
        ("concat", (t // p, cat)),
        ("highway", (t // p, cat)),
        ("highway_pool", (t // (p * p), cat)),
        ("attention", (t // (p * p), cat // 2)),
        ("dense", (t // (p * p), config.dense_width)),
        ("flatten", (t // (p * p) * config.dense_width,)),
        ("logits", (config.classes,)),
    ]


def classifier_forward(latent, model, training=False, capture=False, rng=None):
    """Full forward pass; returns (logits, ActivationCapture or None)."""
    cfg = model.config
    if not isinstance(latent, Tensor):
        latent = Tensor(latent)
    if latent.shape != (cfg.timesteps, cfg.features):
        raise ShapeError(
            f"expected ({cfg.timesteps}, {cfg.features}) latent, got {latent.shape}")

    def conv_stage(x, conv, eta):
        y = layers.conv1d(x, conv)
        y = layers.instance_norm(y)
        y = layers.prelu(y, eta)
        return layers.dropout(y, cfg.dropout, training, rng)

    b1 = layers.maxpool1d(conv_stage(latent, model.conv1, model.eta1), cfg.pool)
    b2 = conv_stage(latent, model.conv2, model.eta2)
    b2 = layers.maxpool1d(conv_stage(b2, model.conv3, model.eta3), cfg.pool)
    cat = concatenate([b1, b2], axis=1)
    hw = layers.maxpool1d(layers.highway_block(cat, model.highway), cfg.pool)
    att = layers.split_time_attention(hw)
    head = layers.instance_norm(layers.dense(att, model.head))
    logits = head.reshape(-1) @ model.out.w + model.out.b

    cap = None
    if capture:
        cap = ActivationCapture(
            pre_attention=hw.data.copy(),
            post_attention=att.data.copy(),
            time_compression=cfg.time_compression)
    return logits, cap


def predict(model, latent):
    logits, _ = classifier_forward(latent, model, training=False)
    return int(np.argmax(logits.data))


def evaluate(model, latents, labels):
    correct = sum(predict(model, x) == y for x, y in zip(latents, labels))
    return correct / len(labels)


@dataclass
class ClassifierTrainConfig:
    epochs: int = 100
    batch_size: int = 16
    learning_rate: float = 0.001
    patience: int = 10  # epochs without train-loss improvement before stopping


def train_classifier(latents, labels, config, train_config=None, seed=0):
    """Minimise softmax cross-entropy with Adam; returns (model, epoch losses)."""
    if train_config is None:
        train_config = ClassifierTrainConfig()
    latents = [np.asarray(x, dtype=np.float32) for x in latents]
    labels = [int(y) for y in labels]
    if len(latents) != len(labels) or not latents:
        raise ConfigError("latents and labels must be non-empty and aligned")
    present = sorted(set(labels))
    if len(present) < 2:
        raise ConfigError(f"training set has a single class {present}; need >= 2")
    if max(present) >= config.classes:
        raise ConfigError(
            f"label {max(present)} out of range for {config.classes} classes")
    config.validate()

    rng = np.random.default_rng(seed)
    model = build_classifier(config, rng)
    opt = Adam(model.parameters(), lr=train_config.learning_rate)

    losses = []
    best = np.inf
    stale = 0
    order = np.arange(len(latents))
    for _ in range(train_config.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start:start + train_config.batch_size]
            opt.zero_grad()
            for idx in batch:
                logits, _ = classifier_forward(
                    Tensor(latents[idx]), model, training=True, rng=rng)
                loss = layers.softmax_cross_entropy(logits, labels[idx])
                epoch_loss += loss.item()
                (loss * (1.0 / len(batch))).backward()
            opt.step()
        epoch_loss /= len(order)
        losses.append(epoch_loss)
        if epoch_loss < best - 1e-9:
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= train_config.patience:
                break
    return model, losses


def save_classifier(model, path):
    save_tensors(path, model.named_tensors())


def load_classifier(path, dropout=0.2, pool=2):
    """Rebuild a classifier from a checkpoint; config is inferred from shapes."""
    named = load_tensors(path)
    k1, feat, f1 = named["conv1.w"].shape
    k2, _, f2a = named["conv2.w"].shape
    f2b = named["conv3.w"].shape[2]
    dense_width = named["head.w"].shape[1]
    flat, classes = named["out.w"].shape
    t_out = flat // dense_width
    config = ClassifierConfig(
        timesteps=t_out * pool * pool, features=feat, classes=classes,
        block1_filters=f1, block1_kernel=k1, block2_filters=(f2a, f2b),
        block2_kernel=k2, dense_width=dense_width, dropout=dropout, pool=pool)
    model = build_classifier(config, np.random.default_rng(0))
    for name, tensor in model.named_tensors().items():
        arr = named[name]
        if arr.shape != tensor.data.shape:
            raise ShapeError(f"checkpoint tensor {name} has shape {arr.shape}, "
                             f"expected {tensor.data.shape}")
        tensor.data = arr.copy()
    return model
