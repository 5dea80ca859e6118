import math

import numpy as np
import pytest

from icilab.errors import ConfigurationError, InputShapeError
from icilab.estimator import EstimatorConfig
from icilab.receivers import (
    MSE_FLOOR_DB,
    ReceiverKind,
    ReceiverSettings,
    data_mask,
    detection_mse,
    frame_mse,
    run_receiver,
)
from icilab.signal_model import OfdmConfig

from conftest import SINGLE_PATH, received

CFG = OfdmConfig(carrier_count=256, block_count=2, pilot_count=50)
FROZEN = ReceiverSettings(estimator=EstimatorConfig(step_fe=0.0))


def pilots(frame, cfg=CFG):
    return frame.data[0, : cfg.pilot_count]


@pytest.mark.parametrize("kind", list(ReceiverKind))
def test_ideal_channel(kind):
    frame, rx = received(CFG, 0, paths=SINGLE_PATH)
    out = run_receiver(kind, rx, pilots(frame), CFG)
    assert frame_mse(out, frame.data, CFG) <= -100
    assert out.bhat.shape == frame.data.shape
    assert out.outputs.shape == (CFG.block_count, CFG.carrier_count)


@pytest.mark.parametrize("seed", range(3))
def test_frozen_afft_is_ffft(seed):
    frame, rx = received(CFG, seed, doppler_factor=2.5e-4, snr_db=20.0)
    a = run_receiver(ReceiverKind.A_FFT, rx, pilots(frame), CFG, FROZEN)
    f = run_receiver(ReceiverKind.F_FFT, rx, pilots(frame), CFG, FROZEN)
    assert np.max(np.abs(a.outputs - f.outputs)) <= 1e-12
    assert a.fe_hat == f.fe_hat == CFG.carrier_spacing


def test_receivers_are_deterministic(doppler_case):
    cfg, frame, rx = doppler_case
    for kind in ReceiverKind:
        one = run_receiver(kind, rx, pilots(frame, cfg), cfg)
        two = run_receiver(kind, rx, pilots(frame, cfg), cfg)
        np.testing.assert_array_equal(one.bhat, two.bhat)


def test_combining_receivers_beat_conventional(doppler_case):
    cfg, frame, rx = doppler_case
    mse = {k: frame_mse(run_receiver(k, rx, pilots(frame, cfg), cfg), frame.data, cfg) for k in ReceiverKind}
    assert mse[ReceiverKind.A_FFT] <= mse[ReceiverKind.F_FFT] < mse[ReceiverKind.CONV_FFT]


def test_afft_reports_estimate(doppler_case):
    cfg, frame, rx = doppler_case
    out = run_receiver(ReceiverKind.A_FFT, rx, pilots(frame, cfg), cfg)
    assert out.fe_hat > 0 and out.iterations >= 1
    assert np.all(np.diff(out.mse_trace) <= 0)
    assert math.isnan(run_receiver(ReceiverKind.P_FFT, rx, pilots(frame, cfg), cfg).fe_hat)


def test_fiducial_override(doppler_case):
    cfg, frame, rx = doppler_case
    base = run_receiver(ReceiverKind.F_FFT, rx, pilots(frame, cfg), cfg)
    same = run_receiver(ReceiverKind.F_FFT, rx, pilots(frame, cfg), cfg, fiducial=cfg.carrier_spacing)
    np.testing.assert_array_equal(base.outputs, same.outputs)
    moved = run_receiver(ReceiverKind.F_FFT, rx, pilots(frame, cfg), cfg, fiducial=1.5 * cfg.carrier_spacing)
    assert moved.fe_hat == 1.5 * cfg.carrier_spacing
    with pytest.raises(ConfigurationError):
        run_receiver(ReceiverKind.F_FFT, rx, pilots(frame, cfg), cfg, fiducial=-1.0)


def test_pilot_count_checked():
    frame, rx = received(CFG, 0, paths=SINGLE_PATH)
    with pytest.raises(InputShapeError):
        run_receiver(ReceiverKind.F_FFT, rx, frame.data[0, :10], CFG)


class TestDetectionMse:
    def test_exact(self):
        b = np.exp(1j * np.arange(10))
        assert detection_mse(b, b) == MSE_FLOOR_DB == -150

    def test_all_antipodal(self):
        b = np.exp(1j * np.arange(10))
        assert detection_mse(-b, b) == pytest.approx(10 * math.log10(4))

    def test_half_antipodal(self):
        b = np.exp(1j * np.arange(10))
        bhat = b.copy()
        bhat[::2] *= -1
        assert detection_mse(bhat, b) == pytest.approx(10 * math.log10(2))

    def test_shape_mismatch(self):
        with pytest.raises(InputShapeError):
            detection_mse(np.ones(3), np.ones(4))

    def test_pilots_excluded(self):
        mask = data_mask(CFG)
        assert mask.sum() == CFG.block_count * (CFG.carrier_count - 1) - CFG.pilot_count
        b = np.ones((CFG.block_count, CFG.carrier_count - 1), complex)
        bhat = b.copy()
        bhat[0, : CFG.pilot_count] = -1
        assert detection_mse(bhat, b, mask) == MSE_FLOOR_DB


class TestKinds:
    @pytest.mark.parametrize("name,kind", [
        ("AFFT", ReceiverKind.A_FFT), ("a-fft", ReceiverKind.A_FFT),
        ("Conv_FFT", ReceiverKind.CONV_FFT), ("pfft", ReceiverKind.P_FFT),
    ])
    def test_parse(self, name, kind):
        assert ReceiverKind.parse(name) is kind

    def test_parse_unknown(self):
        with pytest.raises(ConfigurationError):
            ReceiverKind.parse("MMSE")

    @pytest.mark.parametrize("taps", [0, 2, -3])
    def test_taps_must_be_odd(self, taps):
        with pytest.raises(ConfigurationError):
            ReceiverSettings(taps=taps)

    def test_headline_taps(self):
        assert ReceiverSettings().taps == 3 and ReceiverSettings().A == 1
