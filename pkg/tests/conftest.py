import numpy as np
import pytest

from wristgest.core import ChannelLayout, GestureLabel, SensorClip, Window
from wristgest.dataio import SynthSpec, generate_synth


@pytest.fixture(scope="session")
def synth_index(tmp_path_factory):
    """Small deterministic dataset shared by dataio/pipeline tests."""
    root = tmp_path_factory.mktemp("synthdata")
    spec = SynthSpec(n_participants=4, n_clips_per_class=2, seed=7)
    return generate_synth(spec, root)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_clip(samples, class_id=3, participant="p00", condition="sitting",
              wrist="left", clip_id="clip0", rate=100.0):
    return SensorClip(
        samples=np.asarray(samples, dtype=np.float64),
        layout=ChannelLayout(sample_rate_hz=rate),
        label=GestureLabel.from_class_id(class_id),
        participant_id=participant,
        condition=condition,
        wrist=wrist,
        clip_id=clip_id,
    )


def make_window(samples, class_id=3, clip_ref="clip0", start=0):
    return Window(np.asarray(samples, dtype=np.float64),
                  GestureLabel.from_class_id(class_id), clip_ref, start)


@pytest.fixture
def clip_factory():
    return make_clip


@pytest.fixture
def window_factory():
    return make_window
