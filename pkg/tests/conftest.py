import numpy as np
import pytest
from hypothesis import settings

from icilab.channel import ChannelSpec, apply_channel
from icilab.rxfront import front_end
from icilab.signal_model import OfdmConfig
from icilab.txchain import random_frame

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")

SINGLE_PATH = ((1.0, 0.0),)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_cfg():
    return OfdmConfig(carrier_count=64, block_count=2, pilot_count=20)


def received(cfg, seed, **channel):
    """(frame, ReceivedFrame) for one seeded frame through a channel."""
    frame = random_frame(cfg, np.random.default_rng(seed))
    spec = ChannelSpec(seed=seed + 1, **channel)
    return frame, front_end(apply_channel(frame.baseband, spec, cfg), cfg)


@pytest.fixture(scope="session")
def doppler_case():
    """K=256 frame with moderate Doppler over the default three-path channel."""
    cfg = OfdmConfig(carrier_count=256, block_count=4, pilot_count=100)
    frame, rx = received(cfg, 7, doppler_factor=2.5e-4, snr_db=30.0)
    return cfg, frame, rx
