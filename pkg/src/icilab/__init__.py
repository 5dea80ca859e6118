"""Differential OFDM laboratory for frequency-domain ICI mitigation.

Submodules, in signal-flow order: ``signal_model``, ``txchain``,
``channel``, ``rxfront``, ``demod``, ``estimator``, ``receivers``,
``harness`` (with ``config`` and ``cli``).
"""

from .channel import ChannelSpec, add_noise, apply_channel, resample_doppler
from .demod import DemodBank, combine, conv_fft, fractional_bank, partial_bank, time_weighted_bank
from .errors import (
    ConfigurationError,
    DegenerateDivisionError,
    EstimatorDivergenceError,
    FramingError,
    IcilabError,
    InputShapeError,
)
from .estimator import EstimatorConfig, adapt_weights_frame, estimate_fiducial_offset
from .harness import ExperimentSpec, MseReport, run_experiment, summarize
from .receivers import ReceiverKind, ReceiverSettings, detection_mse, run_receiver
from .rxfront import ReceivedFrame, front_end
from .signal_model import (
    ComplexBlock,
    OfdmConfig,
    differential_decode,
    differential_encode,
    map_bits_to_psk,
    slice_psk,
)
from .txchain import Frame, build_frame, modulate_block, random_frame, upconvert

__version__ = "0.1.0"
