import numpy as np
import pytest

from s2mamba.data import (SceneCube, synthetic_scene, write_cube,
                          write_labels)


@pytest.fixture
def scene():
    return synthetic_scene(height=20, width=18, bands=6, classes=3, seed=7)


@pytest.fixture
def scene_files(tmp_path, scene):
    cube_path = tmp_path / "scene.hsic"
    label_path = tmp_path / "labels.hsilbl"
    write_cube(cube_path, scene.values)
    write_labels(label_path, scene.labels)
    return cube_path, label_path, scene
