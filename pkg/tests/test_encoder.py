"""Denoising autoencoder, AWGN corruption, PCA baseline."""

import numpy as np
import pytest

from eegattn.autodiff import Tensor
from eegattn.encoder import (
    AutoencoderConfig, AutoencoderTrainConfig, add_awgn, autoencoder_forward,
    build_autoencoder, encode, load_autoencoder, pca_fit, pca_inverse_transform,
    pca_transform, reconstruction_loss, save_autoencoder, train_autoencoder,
)
from eegattn.errors import ConfigError, ShapeError


def rank_limited_windows(n_windows, T=256, channels=32, sources=8, seed=0):
    """Random mixing of band-limited sinusoid sources, z-scored per channel."""
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(1.0, 6.0, size=(sources, 3))
    mixing = rng.normal(size=(channels, sources))
    t = np.arange(T) / 128.0
    out = []
    for _ in range(n_windows):
        src = np.zeros((T, sources))
        for l in range(sources):
            for f in freqs[l]:
                src[:, l] += np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
        x = src @ mixing.T
        x = (x - x.mean(axis=0)) / (x.std(axis=0) + 1e-8)
        out.append(x.astype(np.float32))
    return out


class TestAwgn:
    def test_zero_signal_unchanged(self):
        x = np.zeros((100, 4), dtype=np.float32)
        out = add_awgn(x, np.random.default_rng(0))
        np.testing.assert_array_equal(out, x)

    def test_unity_snr(self):
        T = 100_000
        t = np.arange(T)
        x = np.stack([np.sin(0.01 * t), 2.0 * np.cos(0.003 * t)], axis=1)
        noisy = add_awgn(x, np.random.default_rng(1))
        noise = noisy - x
        snr = (x * x).mean(axis=0) / (noise * noise).mean(axis=0)
        assert np.all(np.abs(snr - 1.0) < 0.05)

    def test_noise_independent_across_channels(self):
        T = 100_000
        x = np.ones((T, 3), dtype=np.float64)
        noise = add_awgn(x, np.random.default_rng(2)) - x
        corr = np.corrcoef(noise.T)
        off_diag = corr[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off_diag) < 0.02)


class TestAutoencoderForward:
    def test_default_shapes(self):
        rng = np.random.default_rng(3)
        model = build_autoencoder(AutoencoderConfig(channels=32, latent_dims=8), rng)
        x = Tensor(rng.normal(size=(512, 32)).astype(np.float32))
        latent, recon = autoencoder_forward(model, x)
        assert latent.shape == (512, 8)
        assert recon.shape == (512, 32)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        model = build_autoencoder(AutoencoderConfig(channels=6, latent_dims=3), rng)
        x = Tensor(np.random.default_rng(5).normal(size=(40, 6)).astype(np.float32))
        l1, r1 = autoencoder_forward(model, x)
        l2, r2 = autoencoder_forward(model, x)
        np.testing.assert_array_equal(l1.data, l2.data)
        np.testing.assert_array_equal(r1.data, r2.data)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(6)
        model = build_autoencoder(AutoencoderConfig(channels=6, latent_dims=3), rng)
        with pytest.raises(ShapeError):
            encode(model, np.ones((10, 5), dtype=np.float32))

    def test_supports_various_latent_dims(self):
        rng = np.random.default_rng(7)
        for lat in (4, 8, 16):
            model = build_autoencoder(AutoencoderConfig(channels=32, latent_dims=lat),
                                      rng)
            x = Tensor(rng.normal(size=(64, 32)).astype(np.float32))
            latent, recon = autoencoder_forward(model, x)
            assert latent.shape == (64, lat)
            assert recon.shape == (64, 32)


class TestReconstructionLoss:
    def test_identical_is_zero(self):
        x = Tensor(np.random.default_rng(8).normal(size=(10, 3)))
        assert reconstruction_loss(x, x).item() == 0.0

    def test_hand_case(self):
        clean = Tensor(np.array([1.0, 2.0]))
        recon = Tensor(np.array([0.0, 0.0]))
        assert abs(reconstruction_loss(clean, recon).item() - 2.5) < 1e-7

    def test_non_negative(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            a = Tensor(rng.normal(size=(5, 2)))
            b = Tensor(rng.normal(size=(5, 2)))
            assert reconstruction_loss(a, b).item() >= 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            reconstruction_loss(Tensor(np.ones((3, 2))), Tensor(np.ones((2, 3))))


class TestTraining:
    def test_loss_decreases_on_low_rank_data(self):
        windows = rank_limited_windows(24, T=128, channels=16, sources=4, seed=10)
        model, losses = train_autoencoder(
            windows, AutoencoderConfig(channels=16, latent_dims=4),
            AutoencoderTrainConfig(epochs=8, batch_size=2), seed=11)
        assert losses[-1] < losses[0]

    def test_seed_reproducibility_bitwise(self, tmp_path):
        windows = rank_limited_windows(6, T=64, channels=8, sources=4, seed=12)
        cfg = AutoencoderConfig(channels=8, latent_dims=4)
        tc = AutoencoderTrainConfig(epochs=2, batch_size=2)
        paths = []
        for run in range(2):
            model, _ = train_autoencoder(windows, cfg, tc, seed=13)
            p = tmp_path / f"run{run}.eawt"
            save_autoencoder(model, p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_empty_dataset_rejected(self):
        with pytest.raises(ConfigError):
            train_autoencoder([], AutoencoderConfig(channels=4, latent_dims=2))

    def test_trained_model_beats_doing_nothing(self):
        # denoising bound: loss(clean, recon(noisy)) < loss(clean, noisy)
        windows = rank_limited_windows(32, T=128, channels=16, sources=4, seed=14)
        held_out = rank_limited_windows(4, T=128, channels=16, sources=4, seed=15)
        model, _ = train_autoencoder(
            windows, AutoencoderConfig(channels=16, latent_dims=4),
            AutoencoderTrainConfig(epochs=15, batch_size=2), seed=16)
        rng = np.random.default_rng(17)
        model_mse, identity_mse = 0.0, 0.0
        for clean in held_out:
            noisy = add_awgn(clean, rng)
            _, recon = autoencoder_forward(model, Tensor(noisy))
            model_mse += reconstruction_loss(clean, recon).item()
            identity_mse += float(((noisy - clean) ** 2).mean())
        assert model_mse < identity_mse


class TestCheckpointRoundTrip:
    def test_save_load_identical(self, tmp_path):
        rng = np.random.default_rng(18)
        model = build_autoencoder(AutoencoderConfig(channels=12, latent_dims=4), rng)
        p = tmp_path / "ae.eawt"
        save_autoencoder(model, p)
        loaded = load_autoencoder(p)
        assert loaded.config.channels == 12
        assert loaded.config.latent_dims == 4
        for name, tensor in model.named_tensors().items():
            np.testing.assert_array_equal(tensor.data, loaded.named_tensors()[name].data)


class TestPca:
    def test_exact_subspace_preserved(self):
        rng = np.random.default_rng(19)
        basis = np.linalg.qr(rng.normal(size=(6, 3)))[0]  # (6, 3) orthonormal
        z = rng.normal(size=(300, 3))
        x = z @ basis.T + 5.0
        model = pca_fit(x, latent_dims=3)
        recon = pca_inverse_transform(pca_transform(x, model), model)
        assert np.max(np.abs(recon - x)) < 1e-5

    def test_orthonormal_components(self):
        rng = np.random.default_rng(20)
        x = rng.normal(size=(500, 7)) * rng.uniform(0.5, 3.0, size=7)
        model = pca_fit(x, latent_dims=4)
        gram = model.components.T @ model.components
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-6)

    def test_matches_svd_oracle(self):
        # independent route: right singular vectors of the centered data
        rng = np.random.default_rng(21)
        x = rng.normal(size=(200, 6)) @ rng.normal(size=(6, 6))
        model = pca_fit(x, latent_dims=4)
        centered = x - x.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        oracle = vt[:4].T
        for j in range(4):
            col = oracle[:, j]
            k = np.argmax(np.abs(col))
            if col[k] < 0:
                col = -col
            assert np.max(np.abs(model.components[:, j] - col)) < 1e-5

    def test_transform_is_linear(self):
        # transform(ax + by) = a*transform(x) + b*transform(y) + (a+b-1)*(mean @ W)
        rng = np.random.default_rng(22)
        x = rng.normal(size=(50, 5))
        y = rng.normal(size=(50, 5))
        model = pca_fit(np.vstack([x, y]), latent_dims=3)
        a, b = 2.5, -1.25
        lhs = pca_transform(a * x + b * y, model)
        rhs = (a * pca_transform(x, model) + b * pca_transform(y, model)
               + (a + b - 1.0) * (model.mean @ model.components))
        np.testing.assert_allclose(lhs, rhs, atol=1e-8)

    def test_insufficient_samples_rejected(self):
        with pytest.raises(ConfigError):
            pca_fit(np.ones((3, 6)), latent_dims=2)
