"""Fiducial-frequency-offset estimation by coordinate descent.

The objective is the composite pilot MSE

    E(w, f_e) = sum_{k in pilots} |b_k - x_k / x_{k-1}|^2,   x_k = w_k^H z_k(f_e)

over the first block. Weights are stored for carriers 0..P (row 0 is the
reference carrier that anchors the first differential ratio) and the pilots
are carriers 1..P.

Two gradients are exposed:

* ``fe_gradient`` returns gamma = sum Im{(x~_k x_{k-1} - x~_{k-1} x_k) / x_{k-1}^2 * conj(e_k)}
  with x~_k = w_k^H (beta * z~_k). The exact derivative is
  dE/df_e = -4 pi / (A + 1) * gamma, so f_e <- f_e + mu * gamma descends.
* ``weight_gradient`` returns g = -dE/dw_k^* including the look-ahead term
  through b_{k+1}; w_k <- w_k + mu * g descends.

The weight step of the descent is a carried sweep: every pilot starts from
its predecessor's freshly updated weights and takes one normalized step
along the causal part of g. Chaining the pilots this way keeps the weights
from fitting every carrier independently, which would flatten E in f_e.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .demod import DemodBank, fractional_bank, impulse_weights, time_weighted_bank
from .errors import ConfigurationError, DegenerateDivisionError, EstimatorDivergenceError
from .signal_model import OfdmConfig, constellation

log = logging.getLogger(__name__)

NLMS_EPS = 1e-8
MAX_HALVINGS = 8
DIVERGENCE_DB = 20.0
ABS_FLOOR = 1e-24       # E at this level is rounding noise; nothing left to fit


@dataclass(frozen=True)
class EstimatorConfig:
    """Step sizes, stopping rules and gates for weight and f_e adaptation.

    ``step_fe=None`` calibrates the f_e step on the first gradient so that
    it moves f_e by ``first_step_frac * df``. ``fe_init=None`` means df.
    """

    step_fe: float | None = None
    step_w: float = 0.5
    threshold_db: float = 0.01
    max_outer: int = 50
    max_inner: int = 50
    fe_init: float | None = None
    taps_A: int = 1
    gradient_scaling: bool = True
    error_threshold: float = 1.0
    pilot_error_threshold: float = math.inf
    step_track: float = 0.3
    fe_direction: str = "reduced"
    fd_step: float = 0.01
    first_step_frac: float = 0.05
    inner_rtol: float = 1e-6

    def __post_init__(self):
        if self.step_fe is not None and self.step_fe < 0:
            raise ConfigurationError("step_fe must be >= 0")
        if self.step_w <= 0 or self.threshold_db <= 0 or self.max_outer < 1:
            raise ConfigurationError("need step_w > 0, threshold_db > 0, max_outer >= 1")
        if self.max_inner < 1 or self.taps_A < 0:
            raise ConfigurationError("need max_inner >= 1 and taps_A >= 0")
        if self.fe_direction not in ("reduced", "partial"):
            raise ConfigurationError("fe_direction must be 'reduced' or 'partial'")
        if self.step_track <= 0 or self.error_threshold < 0:
            raise ConfigurationError("need step_track > 0 and error_threshold >= 0")


@dataclass
class EstimatorState:
    f_e: float
    weights: np.ndarray             # (P+1, M), row 0 = reference carrier
    mse_trace: list = field(default_factory=list)
    fe_trace: list = field(default_factory=list)
    iter: int = 0
    fe_steps: int = 0
    weight_passes: int = 0


@dataclass(frozen=True)
class EstimateResult:
    """Final f_e and pilot weights; traces hold one entry per outer iteration."""

    f_e: float
    weights: np.ndarray
    mse_trace: tuple
    fe_trace: tuple
    iterations: int
    initial_mse: float = math.nan
    initial_fe: float = math.nan


# -- objective and gradients on precomputed banks ---------------------------

def _values(bank):
    return bank.values if isinstance(bank, DemodBank) else np.asarray(bank)


def pilot_outputs(z, weights) -> np.ndarray:
    """x_k = w_k^H z_k for carriers 0..P."""
    z = _values(z)
    P1 = weights.shape[0]
    return np.einsum("km,km->k", weights.conj(), z[:P1])


def _ratios(x):
    if np.any(np.abs(x[:-1]) == 0):
        raise DegenerateDivisionError("differential reference output is zero")
    return x[1:] / x[:-1]


def pilot_errors(z, weights, b) -> np.ndarray:
    """e_k = b_k - x_k / x_{k-1} for the pilots 1..P."""
    x = pilot_outputs(z, weights)
    return np.asarray(b)[: x.size - 1] - _ratios(x)


def pilot_mse(z, weights, b) -> float:
    e = pilot_errors(z, weights, b)
    return float(np.sum(np.abs(e) ** 2))


def fe_gradient(z, zt, weights, b, A: int) -> float:
    """gamma for the pilots, given the bank z and the time-weighted bank zt."""
    beta = np.arange(-A, A + 1, dtype=float)
    x = pilot_outputs(z, weights)
    xt = np.einsum("km,km->k", weights.conj(), beta * _values(zt)[: x.size])
    e = np.asarray(b)[: x.size - 1] - _ratios(x)
    q = (xt[1:] * x[:-1] - xt[:-1] * x[1:]) / x[:-1] ** 2
    return float(np.sum(np.imag(q * np.conj(e))))


def weight_gradient(z, weights, b, p: int) -> np.ndarray:
    """g for pilot index p (carrier p+1); the last pilot has no look-ahead term."""
    z = _values(z)
    x = pilot_outputs(z, weights)
    e = np.asarray(b)[: x.size - 1] - _ratios(x)
    k = p + 1
    g = z[k] * np.conj(e[k - 1]) / x[k - 1]
    if k < x.size - 1:
        g = g - z[k] * x[k + 1] * np.conj(e[k]) / x[k] ** 2
    return g


# -- block-level wrappers --------------------------------------------------

def composite_mse(weights, f_e, block, b, cfg: OfdmConfig, A: int = 1) -> float:
    return pilot_mse(fractional_bank(block, A, f_e, cfg), weights, b)


def grad_fe(weights, f_e, block, b, cfg: OfdmConfig, A: int = 1) -> float:
    z = fractional_bank(block, A, f_e, cfg)
    zt = time_weighted_bank(block, A, f_e, cfg)
    return fe_gradient(z, zt, weights, b, A)


def grad_w(weights, f_e, block, b, cfg: OfdmConfig, p: int, A: int = 1) -> np.ndarray:
    return weight_gradient(fractional_bank(block, A, f_e, cfg), weights, b, p)


# -- carried weight sweeps -------------------------------------------------

def nlms_step(z, e, x_ref, scaling: bool) -> np.ndarray:
    """Causal weight direction z e^* / x_ref, optionally normalized.

    With scaling, a unit step moves the ratio x_k / x_ref by exactly e_k
    (up to the NLMS_EPS regularizer).
    """
    if scaling:
        return z * np.conj(e) * np.conj(x_ref) / (np.vdot(z, z).real + NLMS_EPS)
    return z * np.conj(e) / x_ref


def pilot_pass(z, b, w_start, mu: float, scaling: bool = True, threshold: float = math.inf):
    """One carried sweep over carriers 1..P starting from ``w_start``.

    Returns the (P+1, M) weight rows and the number of skipped updates.
    """
    z = _values(z)
    P = len(b)
    with np.errstate(all="ignore"):
        return _pilot_pass(z, b, w_start, mu, scaling, threshold, P)


def _pilot_pass(z, b, w_start, mu, scaling, threshold, P):
    W = np.empty((P + 1, z.shape[1]), dtype=complex)
    w = np.array(w_start, dtype=complex)
    W[0] = w
    x_prev = np.vdot(w, z[0])
    skipped = 0
    for k in range(1, P + 1):
        zk = z[k]
        x = np.vdot(w, zk)
        if x_prev == 0:
            raise DegenerateDivisionError(f"zero output on carrier {k - 1}")
        e = b[k - 1] - x / x_prev
        if abs(e) <= threshold:
            w = w + mu * nlms_step(zk, e, x_prev, scaling)
            x = np.vdot(w, zk)
        else:
            skipped += 1
        W[k] = w
        x_prev = x
    return W, skipped


def train_pilot_weights(z, b, w_start, mu: float, max_passes: int, rtol: float = 1e-6,
                        scaling: bool = True, threshold: float = math.inf):
    """Iterate carried sweeps to their fixed point.

    Each sweep restarts from the weights the previous sweep ended with, so
    the start-up transient of the first sweep is not repeated. The loop runs
    until two consecutive sweeps agree to ``rtol`` (or ``max_passes``) and
    returns the best sweep seen as (weights, E, passes).
    """
    z = _values(z)
    W, _ = pilot_pass(z, b, w_start, mu, scaling, threshold)
    E = _safe_mse(z, W, b)
    best_W, best_E = W, E
    passes = 1
    while passes < max_passes and math.isfinite(E):
        try:
            W, _ = pilot_pass(z, b, W[-1], mu, scaling, threshold)
        except DegenerateDivisionError:
            break
        E_new = _safe_mse(z, W, b)
        passes += 1
        if E_new < best_E:
            best_W, best_E = W, E_new
        if abs(E_new - E) < rtol * E:
            break
        E = E_new
    return best_W, best_E, passes


def _safe_mse(z, W, b) -> float:
    """E, or +inf when the weights have degenerated (zero, overflow or NaN outputs)."""
    try:
        with np.errstate(all="ignore"):
            E = pilot_mse(z, W, b)
    except DegenerateDivisionError:
        return math.inf
    return E if math.isfinite(E) else math.inf


def fit_pilot_weights(z, b, config: EstimatorConfig = EstimatorConfig()):
    """Train pilot weights on a fixed bank from the impulse. Returns (weights, E)."""
    z = _values(z)
    b = np.asarray(b, dtype=complex)
    W0 = impulse_weights(b.size + 1, z.shape[1])
    E0 = _safe_mse(z, W0, b)
    W, E, _ = train_pilot_weights(z, b, W0[0], config.step_w,
                                  config.max_inner, config.inner_rtol,
                                  config.gradient_scaling, config.pilot_error_threshold)
    return (W, E) if E < E0 else (W0, E0)


def profile_mse(block, b, f_e, cfg: OfdmConfig, config: EstimatorConfig = EstimatorConfig()):
    """E at f_e with pilot weights retrained from the impulse (grid-search oracle)."""
    return fit_pilot_weights(fractional_bank(block, config.taps_A, f_e, cfg), b, config)[1]


# -- Algorithm: alternate weight sweeps and f_e gradient steps -------------

def _refit(z, b, start, config: EstimatorConfig):
    W, E, _ = train_pilot_weights(z, b, start, config.step_w, config.max_inner, config.inner_rtol,
                                  config.gradient_scaling, config.pilot_error_threshold)
    return W, E


def _reduced_gamma(block, b, f, start, cfg: OfdmConfig, config: EstimatorConfig) -> float:
    """Central-difference slope of E with the weights re-fitted at each f_e.

    Returned in the units of ``fe_gradient`` (dE/df_e = -4 pi / (A+1) * gamma)
    so the same step rule f_e <- f_e + mu * gamma applies.
    """
    A = config.taps_A
    h = config.fd_step * cfg.carrier_spacing
    E_hi = _refit(fractional_bank(block, A, f + h, cfg), b, start, config)[1]
    E_lo = _refit(fractional_bank(block, A, f - h, cfg), b, start, config)[1]
    return -(E_hi - E_lo) / (2 * h) * (A + 1) / (4 * math.pi)


def estimate_fiducial_offset(block, b, cfg: OfdmConfig,
                             config: EstimatorConfig = EstimatorConfig()) -> EstimateResult:
    """Coordinate descent over (pilot weights, f_e) on the first block.

    ``b`` holds the P pilot symbols for carriers 1..P. Each outer iteration
    (a) re-trains the pilot weights at the current f_e and (b) takes
    backtracked gradient steps in f_e. With the default ``fe_direction``
    the step direction is the slope of E with the weights re-fitted at each
    f_e and every trial point is scored the same way; ``"partial"`` uses the
    fixed-weight gradient of ``fe_gradient`` instead. Steps are accepted
    only when they lower E, so ``mse_trace`` is non-increasing.
    """
    b = np.asarray(b, dtype=complex)
    if b.size < 2:
        raise ConfigurationError("need at least two pilots")
    A = config.taps_A
    M = 2 * A + 1
    f = cfg.carrier_spacing if config.fe_init is None else float(config.fe_init)
    if f <= 0:
        raise ConfigurationError("initial f_e must be positive")
    f_start = f
    mu_fe = config.step_fe

    z = fractional_bank(block, A, f, cfg)
    state = EstimatorState(f_e=f, weights=impulse_weights(b.size + 1, M))
    E = _safe_mse(z, state.weights, b)
    if not math.isfinite(E):
        raise DegenerateDivisionError("impulse weights give a zero or non-finite output")
    E_start = E

    if A == 0 or mu_fe == 0:
        # f_e is frozen: plain pilot training on the fixed bank
        W, E = fit_pilot_weights(z, b, config)
        return EstimateResult(f_e=f, weights=W, mse_trace=(E,), fe_trace=(f,), iterations=1,
                              initial_mse=E_start, initial_fe=f)

    partial = config.fe_direction == "partial"
    while state.iter < config.max_outer:
        state.iter += 1
        E_outer = E

        # (a) pilot weights at fixed f_e
        W, E_w, passes = train_pilot_weights(
            z, b, state.weights[-1] if state.iter > 1 else state.weights[0],
            config.step_w, config.max_inner, config.inner_rtol,
            config.gradient_scaling, config.pilot_error_threshold,
        )
        state.weight_passes += passes
        if E_w < E:
            state.weights, E = W, E_w

        # (b) f_e steps
        for _ in range(config.max_inner if E >= ABS_FLOOR else 0):
            if partial:
                zt = time_weighted_bank(block, A, f, cfg)
                with np.errstate(all="ignore"):
                    gamma = fe_gradient(z, zt, state.weights, b, A)
            else:
                gamma = _reduced_gamma(block, b, f, state.weights[-1], cfg, config)
            if gamma == 0 or not math.isfinite(gamma):
                break
            if mu_fe is None:
                mu_fe = config.first_step_frac * cfg.carrier_spacing / abs(gamma)
            step = mu_fe * gamma
            for h in range(MAX_HALVINGS + 1):
                f_try = f + step / 2**h
                if f_try <= 0:
                    continue
                z_try = fractional_bank(block, A, f_try, cfg)
                if partial:
                    W_try, E_try = state.weights, _safe_mse(z_try, state.weights, b)
                else:
                    W_try, E_try = _refit(z_try, b, state.weights[-1], config)
                if E_try < E:
                    break
            else:
                break
            state.fe_steps += 1
            done = E - E_try < config.inner_rtol * E
            f, z, E, state.weights = f_try, z_try, E_try, W_try
            if done:
                break

        state.f_e = f
        state.mse_trace.append(E)
        state.fe_trace.append(f)
        if E > E_start * 10 ** (DIVERGENCE_DB / 10):
            raise EstimatorDivergenceError(f"E rose {DIVERGENCE_DB} dB above its start", state.mse_trace)
        if E < ABS_FLOOR or 10 * abs(math.log10(E_outer / E)) < config.threshold_db:
            break

    log.debug("f_e estimate %.4f Hz after %d iterations (E=%.3g, %d f_e steps, %d weight sweeps)",
              f, state.iter, E, state.fe_steps, state.weight_passes)
    return EstimateResult(
        f_e=f,
        weights=state.weights,
        mse_trace=tuple(state.mse_trace),
        fe_trace=tuple(state.fe_trace),
        iterations=state.iter,
        initial_mse=E_start,
        initial_fe=f_start,
    )


def adapt_weights_frame(banks, pilots, start, config: EstimatorConfig = EstimatorConfig(),
                        psk_order: int = 4):
    """Decision-directed NLMS tracking over every carrier of every block.

    ``banks`` is (N, K, M). Block 0 is swept from ``start`` with the known
    pilots as references on carriers 1..P and hard decisions elsewhere;
    block n > 0 starts carrier k from block n-1's weights on carrier k.
    An update is skipped when |e_k| exceeds ``config.error_threshold``.
    Each output uses the weights held before that carrier's update.

    Returns (weights (N, K, M), outputs x (N, K), skipped update count).
    """
    Z = np.asarray(banks.values if isinstance(banks, DemodBank) else banks)
    if Z.ndim == 2:
        Z = Z[None]
    N, K, M = Z.shape
    pilots = np.asarray(pilots, dtype=complex)
    P = pilots.size
    points = constellation(psk_order)
    mu = config.step_track
    thr = config.error_threshold
    W = np.empty((N, K, M), dtype=complex)
    X = np.empty((N, K), dtype=complex)
    skipped = 0

    # block 0: one carried sweep, pilots as references on carriers 1..P
    w = np.array(start, dtype=complex)
    for k in range(K):
        z = Z[0, k]
        x = np.vdot(w, z)
        X[0, k] = x
        if k > 0:
            x_ref = X[0, k - 1]
            if x_ref == 0:
                raise DegenerateDivisionError(f"zero output on block 0 carrier {k - 1}")
            bhat = x / x_ref
            ref = pilots[k - 1] if k <= P else points[np.argmin(np.abs(bhat - points))]
            e = ref - bhat
            if abs(e) <= thr:
                w = w + mu * nlms_step(z, e, x_ref, config.gradient_scaling)
            else:
                skipped += 1
        W[0, k] = w

    # later blocks: carrier k starts from its own weights in the previous
    # block, so all carriers of a block update at once
    for n in range(1, N):
        Wp, z = W[n - 1], Z[n]
        x = np.einsum("km,km->k", Wp.conj(), z)
        X[n] = x
        x_ref = x[:-1]
        if np.any(x_ref == 0):
            k = int(np.flatnonzero(x_ref == 0)[0])
            raise DegenerateDivisionError(f"zero output on block {n} carrier {k}")
        bhat = x[1:] / x_ref
        e = points[np.argmin(np.abs(bhat[:, None] - points[None, :]), axis=1)] - bhat
        ok = np.abs(e) <= thr
        skipped += int(np.count_nonzero(~ok))
        zk = z[1:]
        if config.gradient_scaling:
            step = zk * (np.conj(e) * np.conj(x_ref) / (np.sum(np.abs(zk) ** 2, axis=1) + NLMS_EPS))[:, None]
        else:
            step = zk * (np.conj(e) / x_ref)[:, None]
        W[n, 0] = Wp[0]
        W[n, 1:] = Wp[1:] + mu * np.where(ok[:, None], step, 0)
    if skipped:
        log.debug("skipped %d of %d weight updates", skipped, N * (K - 1))
    return W, X, skipped


def write_trace_csv(result: EstimateResult, path):
    """Dump (iter, f_e, E_dB) rows for convergence plots; iter 0 is the starting point."""
    rows = [(result.initial_fe, result.initial_mse), *zip(result.fe_trace, result.mse_trace)]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["iter", "f_e", "E_dB"])
        for i, (f, E) in enumerate(rows):
            out.writerow([i, f"{f:.9g}", f"{10 * math.log10(E) if E > 0 else -math.inf:.6f}"])
