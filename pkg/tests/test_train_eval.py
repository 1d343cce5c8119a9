import numpy as np
import pytest

from s2mamba import tree
from s2mamba.data import SplitSpec, make_split, normalize_bands, \
    synthetic_scene
from s2mamba.model import ModelConfig, init_params
from s2mamba.train import (AdamW, TrainConfig, confusion_matrix,
                           cross_entropy, evaluate, lr_at_epoch,
                           metrics_from_confusion, render_class_map, train)


class TestCrossEntropy:
    def test_uniform(self):
        loss, grad = cross_entropy(np.zeros(2), 1)
        assert abs(loss - np.log(2.0)) < 1e-12
        np.testing.assert_allclose(grad, [-0.5, 0.5], atol=1e-12)

    def test_confident(self):
        loss, grad = cross_entropy(np.array([10.0, -10.0]), 1)
        expected = np.log1p(np.exp(-20.0))
        assert abs(loss - expected) < 1e-15
        assert abs(grad[0] + expected) < 1e-12  # grad[0] ~ -2.06e-9

    def test_grad_sums_to_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            logits = rng.normal(size=5) * 10
            _, grad = cross_entropy(logits, int(rng.integers(1, 6)))
            assert abs(grad.sum()) < 1e-12


class TestAdamW:
    def _params(self):
        config = ModelConfig(patch=3, bands=4, latent=4, state=2,
                             classes=2)
        return init_params(config, seed=0, dtype=np.float64)

    def test_decay_only(self):
        params = self._params()
        before = tree.copy(params)
        opt = AdamW(params, weight_decay=0.01)
        opt.step(tree.zeros_like(params), lr=0.1)
        for (_, w), (_, w0) in zip(tree.iter_arrays(params),
                                   tree.iter_arrays(before)):
            np.testing.assert_allclose(w, 0.999 * w0, rtol=1e-12)
        for _, m in tree.iter_arrays(opt.m):
            assert np.all(m == 0.0)

    def test_single_step_closed_form(self):
        params = self._params()
        before = tree.copy(params)
        grads = tree.map_arrays(lambda a: np.ones_like(a), params)
        opt = AdamW(params, weight_decay=0.0)
        opt.step(grads, lr=0.001)
        # bias-corrected mhat = 1, vhat = 1 -> update = -lr / (1 + eps)
        expected = -0.001 / (1.0 + 1e-8)
        for (_, w), (_, w0) in zip(tree.iter_arrays(params),
                                   tree.iter_arrays(before)):
            np.testing.assert_allclose(w - w0, expected, rtol=1e-9)

    def test_deterministic(self):
        runs = []
        for _ in range(2):
            params = self._params()
            opt = AdamW(params, weight_decay=0.01)
            rng = np.random.default_rng(1)
            for _ in range(5):
                grads = tree.map_arrays(
                    lambda a: rng.normal(size=a.shape), params)
                opt.step(grads, lr=0.01)
            runs.append(tree.copy(params))
        for (_, a), (_, b) in zip(tree.iter_arrays(runs[0]),
                                  tree.iter_arrays(runs[1])):
            np.testing.assert_array_equal(a, b)


class TestLrSchedule:
    def test_initial(self):
        assert lr_at_epoch(0, 1e-4, 0.995) == 1e-4

    def test_one_step(self):
        assert abs(lr_at_epoch(1, 1e-4, 0.995) - 9.95e-5) < 1e-18

    def test_epoch_400(self):
        expected = 1e-4 * np.exp(400 * np.log(0.995))
        got = lr_at_epoch(400, 1e-4, 0.995)
        assert abs(got - expected) / expected < 1e-12
        assert abs(got - 1.3466e-5) / 1.3466e-5 < 1e-3


class TestMetrics:
    def test_hand_confusion(self):
        oa, aa, kappa, per_class = metrics_from_confusion(
            np.array([[2, 0], [1, 1]]))
        assert oa == 0.75
        assert abs(kappa - 0.5) < 1e-15
        np.testing.assert_allclose(per_class, [1.0, 0.5])

    def test_perfect(self):
        oa, aa, kappa, _ = metrics_from_confusion(np.diag([4, 2, 9]))
        assert oa == 1.0 and aa == 1.0 and kappa == 1.0

    def test_kappa_one_iff_diagonal(self):
        _, _, kappa, _ = metrics_from_confusion(
            np.array([[5, 1], [0, 6]]))
        assert kappa < 1.0

    def test_empty_class_warns(self):
        with pytest.warns(UserWarning, match="no test samples"):
            _, aa, _, per_class = metrics_from_confusion(
                np.array([[3, 0], [0, 0]]))
        assert aa == 1.0
        assert np.isnan(per_class[1])

    def test_confusion_totals(self):
        truth = np.array([1, 1, 2, 3, 3, 3])
        preds = np.array([1, 2, 2, 3, 1, 3])
        conf = confusion_matrix(truth, preds, 3)
        assert conf.sum() == len(truth)
        assert conf[0, 1] == 1 and conf[2, 0] == 1


def small_setup(seed=0):
    scene = normalize_bands(synthetic_scene(16, 16, 6, classes=3,
                                            seed=seed))
    counts = [int((scene.labels == c).sum())
              for c in range(1, 4)]
    spec = SplitSpec(train_counts=[8, 8, 8],
                     test_counts=[c - 8 for c in counts], seed=seed)
    train_idx, test_idx = make_split(scene, spec)
    model = ModelConfig(patch=3, bands=6, latent=8, state=4, classes=3)
    return scene, train_idx, test_idx, model


class TestTraining:
    def test_initial_loss_near_uniform(self):
        scene, train_idx, _, model = small_setup()
        config = TrainConfig(model=model, epochs=1, batch=8, seed=0)
        _, history = train(scene, train_idx, config)
        assert abs(history[0].loss - np.log(3.0)) / np.log(3.0) < 0.2

    def test_loss_decreases(self):
        scene, train_idx, _, model = small_setup()
        config = TrainConfig(model=model, epochs=50, batch=24, lr0=1e-2,
                             seed=0)
        _, history = train(scene, train_idx, config)
        assert history[-1].loss < history[0].loss

    def test_overfit_small_subset(self):
        scene, train_idx, _, model = small_setup()
        config = TrainConfig(model=model, epochs=150, batch=24, lr0=1e-2,
                             seed=0, stop_at_full_accuracy=True)
        _, history = train(scene, train_idx, config)
        assert history[-1].accuracy == 1.0

    def test_checkpoint_and_log_deterministic(self, tmp_path):
        scene, train_idx, _, model = small_setup()
        blobs = []
        for run in ("a", "b"):
            config = TrainConfig(model=model, epochs=3, batch=8, seed=5)
            ckpt = tmp_path / f"{run}.s2m"
            log = tmp_path / f"{run}.log"
            train(scene, train_idx, config, checkpoint_path=ckpt,
                  log_path=log)
            blobs.append((ckpt.read_bytes(), log.read_text()))
        assert blobs[0] == blobs[1]

    def test_log_format(self, tmp_path):
        scene, train_idx, _, model = small_setup()
        config = TrainConfig(model=model, epochs=2, batch=8, seed=0)
        log = tmp_path / "train.log"
        train(scene, train_idx, config, log_path=log)
        lines = log.read_text().strip().split("\n")
        assert len(lines) == 2
        epoch, loss, lr = lines[0].split("\t")
        assert epoch == "0" and float(loss) > 0 and float(lr) == 1e-4


class TestEvaluate:
    def test_untrained_chance_level(self):
        scene, train_idx, test_idx, model = small_setup()
        params = init_params(model, seed=0)
        result = evaluate(scene, test_idx, params, model)
        assert 0.0 <= result["oa"] <= 1.0
        assert result["confusion"].sum() == len(test_idx)

    def test_trained_beats_chance(self):
        scene, train_idx, test_idx, model = small_setup()
        config = TrainConfig(model=model, epochs=60, batch=24, lr0=1e-2,
                             seed=0)
        params, _ = train(scene, train_idx, config)
        result = evaluate(scene, test_idx, params, model)
        assert result["oa"] > 0.6


class TestRenderMap:
    def test_palette_and_unlabeled(self, tmp_path):
        scene, train_idx, _, model = small_setup()
        params = init_params(model, seed=0)
        palette = [[83, 171, 72], [137, 186, 67], [66, 132, 91]]
        out = tmp_path / "map.png"
        img = render_class_map(scene, params, model, palette, out)
        assert out.exists()
        unlabeled = scene.labels == 0
        assert np.all(img[unlabeled] == 0)
        labeled = ~unlabeled
        valid = np.array(palette, dtype=np.uint8)
        flat = img[labeled].reshape(-1, 3)
        assert all(tuple(px) in {tuple(c) for c in valid} for px in flat)

    def test_palette_size_mismatch(self, tmp_path):
        from s2mamba.errors import ConfigError
        scene, _, _, model = small_setup()
        params = init_params(model, seed=0)
        with pytest.raises(ConfigError):
            render_class_map(scene, params, model, [[0, 0, 0]],
                             tmp_path / "x.png")
