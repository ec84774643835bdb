"""Shared fixtures."""

import numpy as np
import pytest

from src.models.config import ModelConfig, TrainConfig
from src.tools.data_collection.synthetic import ScenarioParams, synth_scenario
from src.tools.data_collection.trajectory_loader import serialize_scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_model_config():
    """Narrow network so forward/backward passes stay fast."""
    return ModelConfig(
        tcn_hidden=4,
        gcn_hidden=6,
        gcn_out=4,
        tcn_out=4,
        encoder_hidden=5,
        decoder_hidden=6,
        embedding_dim=3,
        head_hidden=4,
    )


@pytest.fixture
def quick_train_config():
    return TrainConfig(epochs=2, batch_size=4, lr=0.01, seed=0)


@pytest.fixture
def meeting_scene():
    return synth_scenario("meeting", ScenarioParams(n_frames=24), seed=0)


@pytest.fixture
def following_scene():
    return synth_scenario("following", ScenarioParams(n_frames=24), seed=1, first_ped_id=10)


@pytest.fixture
def scene_dir(tmp_path, meeting_scene, following_scene):
    """Directory with two trajectory files."""
    data = tmp_path / "data"
    serialize_scene(meeting_scene, data / "meeting.txt")
    serialize_scene(following_scene, data / "following.txt")
    return data
