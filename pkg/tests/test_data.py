import numpy as np
import pytest

from s2mamba.data import (Manifest, SceneCube, SplitSpec, _reflect_index,
                          extract_patch, load_scene, make_split,
                          normalize_bands, synthetic_scene, write_cube,
                          write_labels)
from s2mamba.errors import (ConfigError, ConsistencyError,
                            DegenerateBandError, FormatError, SplitError)


class TestSceneIO:
    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(2, 2, 3)).astype(np.float32)
        labels = np.array([[1, 0], [2, 1]], dtype=np.int32)
        write_cube(tmp_path / "c.hsic", values)
        write_labels(tmp_path / "c.hsilbl", labels)
        cube = load_scene(tmp_path / "c.hsic")
        assert cube.height == 2 and cube.width == 2 and cube.bands == 3
        np.testing.assert_array_equal(cube.values, values)
        np.testing.assert_array_equal(cube.labels, labels)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "bad.hsic").write_bytes(b"XXXXXXXX" + b"\0" * 16)
        with pytest.raises(FormatError, match="magic"):
            load_scene(tmp_path / "bad.hsic", tmp_path / "bad.hsic")

    def test_truncated_payload(self, tmp_path, scene_files):
        cube_path, label_path, _ = scene_files
        data = cube_path.read_bytes()
        (tmp_path / "trunc.hsic").write_bytes(data[:len(data) - 7])
        with pytest.raises(FormatError, match="truncated"):
            load_scene(tmp_path / "trunc.hsic", label_path)

    def test_label_dim_mismatch(self, tmp_path):
        write_cube(tmp_path / "c.hsic", np.zeros((2, 2, 3), np.float32))
        write_labels(tmp_path / "c.hsilbl", np.zeros((3, 2), np.uint16))
        with pytest.raises(ConsistencyError):
            load_scene(tmp_path / "c.hsic")


class TestNormalize:
    def test_two_point_band(self):
        values = np.array([[[0.0]], [[2.0]]], dtype=np.float32)
        labels = np.ones((2, 1), dtype=np.int32)
        out = normalize_bands(SceneCube(values, labels))
        np.testing.assert_allclose(out.values.reshape(-1), [-1.0, 1.0],
                                   atol=1e-6)

    def test_idempotent(self, scene):
        once = normalize_bands(scene)
        twice = normalize_bands(once)
        np.testing.assert_allclose(once.values, twice.values, atol=1e-6)

    def test_moments(self):
        cube = synthetic_scene(4, 4, 3, classes=2, seed=1)
        out = normalize_bands(cube)
        flat = out.values.reshape(-1, 3).astype(np.float64)
        assert np.all(np.abs(flat.mean(axis=0)) < 1e-6)
        assert np.all(np.abs(flat.var(axis=0) - 1.0) < 1e-5)

    def test_constant_band_error(self):
        values = np.zeros((2, 2, 2), dtype=np.float32)
        values[:, :, 0] = np.arange(4).reshape(2, 2)
        with pytest.raises(DegenerateBandError, match="band 1"):
            normalize_bands(SceneCube(values, np.ones((2, 2), np.int32)))


class TestPatch:
    def test_center_identity(self, scene):
        rows, cols = np.nonzero(scene.labels)
        r, c = int(rows[5]), int(cols[5])
        patch = extract_patch(scene, r, c, 7)
        np.testing.assert_array_equal(patch.values[3, 3], scene.values[r, c])
        assert patch.label == scene.labels[r, c]

    def test_corner_mirror(self, scene):
        scene.labels[0, 0] = 1
        patch = extract_patch(scene, 0, 0, 3)
        np.testing.assert_array_equal(patch.values[0, 0],
                                      scene.values[1, 1])

    def test_degenerate_window(self, scene):
        rows, cols = np.nonzero(scene.labels)
        r, c = int(rows[0]), int(cols[0])
        patch = extract_patch(scene, r, c, 1)
        np.testing.assert_array_equal(patch.values[0, 0], scene.values[r, c])

    def test_even_size_rejected(self, scene):
        with pytest.raises(ConfigError):
            extract_patch(scene, 1, 1, 4)

    def test_unlabeled_center_rejected(self, scene):
        rows, cols = np.nonzero(scene.labels == 0)
        with pytest.raises(SplitError):
            extract_patch(scene, int(rows[0]), int(cols[0]), 3)

    def test_coverage_all_sizes(self, scene):
        rows, cols = np.nonzero(scene.labels)
        for size in (1, 3, 5, 7, 9, 11, 13):
            for i in (0, len(rows) // 2, len(rows) - 1):
                patch = extract_patch(scene, int(rows[i]), int(cols[i]),
                                      size)
                assert np.all(np.isfinite(patch.values))
                half = size // 2
                np.testing.assert_array_equal(
                    patch.values[half, half],
                    scene.values[rows[i], cols[i]])

    def test_reflection_rule(self):
        assert _reflect_index(-1, 10) == 1
        assert _reflect_index(10, 10) == 8
        assert _reflect_index(0, 1) == 0
        assert _reflect_index(-3, 4) == 3


class TestSplit:
    def _spec(self, scene):
        counts = [int((scene.labels == c).sum())
                  for c in range(1, scene.labels.max() + 1)]
        train = [min(5, n - 1) for n in counts]
        test = [n - t for n, t in zip(counts, train)]
        return SplitSpec(train_counts=train, test_counts=test, seed=3)

    def test_counts_and_disjoint(self, scene):
        spec = self._spec(scene)
        train, test = make_split(scene, spec)
        assert len(train) == sum(spec.train_counts)
        assert len(test) == sum(spec.test_counts)
        assert np.intersect1d(train, test).size == 0
        labels = scene.labels.reshape(-1)
        for cls in range(1, scene.labels.max() + 1):
            assert (labels[train] == cls).sum() == spec.train_counts[cls - 1]

    def test_deterministic(self, scene):
        spec = self._spec(scene)
        a = make_split(scene, spec)
        b = make_split(scene, spec)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_infeasible(self, scene):
        spec = self._spec(scene)
        spec.train_counts[0] = 10 ** 6
        with pytest.raises(SplitError, match="class 1"):
            make_split(scene, spec)

    def test_explicit_masks_override(self, scene):
        spec = self._spec(scene)
        manifest = Manifest(class_names=["a"], palette=[[0, 0, 0]],
                            train_counts=[1], test_counts=[1],
                            train_indices=[0, 1], test_indices=[2, 3])
        train, test = make_split(scene, spec, manifest)
        np.testing.assert_array_equal(train, [0, 1])
        np.testing.assert_array_equal(test, [2, 3])
