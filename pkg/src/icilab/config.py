"""YAML experiment configuration.

Schema (every section and key is optional; missing keys take the defaults
shown, which are the headline desk-scale settings):

    ofdm:
      carrier_count: 1024
      block_count: 8
      bandwidth: 12000.0        # Hz
      center_freq: 32000.0      # Hz
      sample_rate: 192000.0     # Hz
      guard_interval: 0.016     # s
      psk_order: 4
      pilot_count: 200
      reference_symbol: [1.0, 0.0]   # re, im
    channel:
      doppler_factor: 2.5e-4
      snr_db: 30.0              # null disables noise
      coarse_alpha: 0.0
      paths:                    # gain magnitude, phase in degrees, delay in s
        - {gain: 1.0, phase_deg: 0.0, delay: 0.0}
        - {gain: 0.5, phase_deg: 45.0, delay: 0.002}
        - {gain: 0.25, phase_deg: -60.0, delay: 0.005}
      jitter: null              # per-path phase drift, rad/s
      path_doppler: null        # per-path Doppler factors
    receivers:
      names: [ConvFFT, PFFT, FFFT, AFFT]
      taps: 3
    estimator:                  # any EstimatorConfig field
      step_w: 0.5
    sweeps:                     # values per axis; fe is in Hz and defaults
      snr: [...]                # to 41 points over [0.5, 2.5] * df
      alpha: [...]
      carriers: [...]
      fe: [...]
    seeds: 10                   # count (seeds 0..n-1) or an explicit list
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelSpec
from .errors import ConfigurationError
from .estimator import EstimatorConfig
from .harness import ExperimentSpec
from .receivers import ReceiverKind, ReceiverSettings
from .signal_model import OfdmConfig

DEFAULT_SWEEPS = {
    "snr": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
    "alpha": [5e-5, 1e-4, 1.5e-4, 2e-4, 2.5e-4, 3e-4],
    "carriers": [64, 128, 256, 512, 1024, 2048],
}
DEFAULT_PATHS = [
    {"gain": 1.0, "phase_deg": 0.0, "delay": 0.0},
    {"gain": 0.5, "phase_deg": 45.0, "delay": 0.002},
    {"gain": 0.25, "phase_deg": -60.0, "delay": 0.005},
]
_SECTIONS = {"ofdm", "channel", "receivers", "estimator", "sweeps", "seeds"}


def _check_keys(section: str, got: dict, allowed):
    extra = set(got) - set(allowed)
    if extra:
        raise ConfigurationError(f"unknown key(s) in {section}: {sorted(extra)}")


def _ofdm(d: dict) -> OfdmConfig:
    fields = {f.name for f in dataclasses.fields(OfdmConfig)}
    _check_keys("ofdm", d, fields)
    d = dict(d)
    if "reference_symbol" in d:
        ref = d["reference_symbol"]
        d["reference_symbol"] = complex(*ref) if isinstance(ref, (list, tuple)) else complex(ref)
    for key in ("bandwidth", "center_freq", "sample_rate", "guard_interval"):
        if key in d:
            d[key] = float(d[key])
    return OfdmConfig(**d)


def _channel(d: dict):
    _check_keys("channel", d, {"doppler_factor", "snr_db", "coarse_alpha", "paths", "jitter", "path_doppler"})
    paths = []
    for p in d.get("paths", DEFAULT_PATHS):
        _check_keys("channel.paths", p, {"gain", "phase_deg", "delay"})
        gain = float(p.get("gain", 1.0)) * cmath.exp(1j * math.radians(float(p.get("phase_deg", 0.0))))
        paths.append((gain, float(p.get("delay", 0.0))))
    snr = d.get("snr_db", 30.0)
    spec = ChannelSpec(
        paths=tuple(paths),
        doppler_factor=float(d.get("doppler_factor", 2.5e-4)),
        snr_db=None if snr is None else float(snr),
        jitter=d.get("jitter"),
        path_doppler=d.get("path_doppler"),
    )
    return spec, float(d.get("coarse_alpha", 0.0))


def _estimator(d: dict) -> EstimatorConfig:
    fields = {f.name for f in dataclasses.fields(EstimatorConfig)}
    _check_keys("estimator", d, fields)
    return EstimatorConfig(**d)


def _seeds(raw) -> tuple:
    if isinstance(raw, int):
        if raw < 1:
            raise ConfigurationError("seed count must be >= 1")
        return tuple(range(raw))
    if isinstance(raw, list) and raw and all(isinstance(s, int) for s in raw):
        return tuple(raw)
    raise ConfigurationError("seeds must be a positive count or a list of integers")


def default_fe_grid(cfg: OfdmConfig, points: int = 41) -> list:
    return list(np.linspace(0.5, 2.5, points) * cfg.carrier_spacing)


def load_config(path=None, text: str | None = None) -> dict:
    """Parse a config file (or YAML text) into a dict of built objects."""
    if text is None:
        try:
            text = Path(path).read_text() if path is not None else ""
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from exc
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a mapping")
    _check_keys("config", raw, _SECTIONS)
    try:
        ofdm = _ofdm(raw.get("ofdm") or {})
        channel, coarse = _channel(raw.get("channel") or {})
        rx = raw.get("receivers") or {}
        _check_keys("receivers", rx, {"names", "taps"})
        receivers = tuple(ReceiverKind.parse(n) for n in rx.get("names", [k.value for k in ReceiverKind]))
        settings = ReceiverSettings(taps=int(rx.get("taps", 3)),
                                    estimator=_estimator(raw.get("estimator") or {}))
        sweeps = dict(DEFAULT_SWEEPS)
        user_sweeps = raw.get("sweeps") or {}
        _check_keys("sweeps", user_sweeps, {"snr", "alpha", "carriers", "fe"})
        sweeps.update({k: [float(v) for v in vals] for k, vals in user_sweeps.items()})
        sweeps.setdefault("fe", default_fe_grid(ofdm))
        seeds = _seeds(raw.get("seeds", 10))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc
    return {
        "ofdm": ofdm,
        "channel": channel,
        "coarse_alpha": coarse,
        "receivers": receivers,
        "settings": settings,
        "sweeps": sweeps,
        "seeds": seeds,
    }


def build_spec(conf: dict, sweep: str, seeds=None, output=None) -> ExperimentSpec:
    if sweep not in conf["sweeps"]:
        raise ConfigurationError(f"unknown sweep {sweep!r}")
    return ExperimentSpec(
        ofdm=conf["ofdm"],
        channel=conf["channel"],
        receivers=conf["receivers"],
        sweep=sweep,
        values=tuple(conf["sweeps"][sweep]),
        seeds=tuple(conf["seeds"] if seeds is None else seeds),
        settings=conf["settings"],
        coarse_alpha=conf["coarse_alpha"],
        output=output,
    )
