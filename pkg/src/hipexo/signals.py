"""Shared numeric kernels: sigmoid modulation, Butterworth low-pass filters
(causal streaming and zero-lag batch), exponential moving average, and
positive-work integration.

All kernels are either pure functions or operate on caller-owned state, so
they are safe to use from multiple simulation workers on disjoint state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# exp() argument clamp; the logistic curve is saturated to machine precision
# long before |z| reaches this, so clamping only prevents overflow
EXP_CLAMP = 500.0


@dataclass
class SigmoidParams:
    """Slope w (1/unit-of-input) and horizontal offset phi of a logistic curve."""

    w: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.w) and math.isfinite(self.phi)):
            raise ValueError("sigmoid parameters must be finite")


def sigmoid(x: float, p: SigmoidParams) -> float:
    """Logistic curve 1 / (1 + exp(-w*x + phi)).

    Strictly monotone in x for w != 0, output in (0, 1). The exponent is
    clamped so large |x| saturates instead of overflowing; at double
    precision the output saturates to exactly 1.0 once the exponent passes
    about 37, and stays strictly above 0 everywhere.
    """
    z = -p.w * x + p.phi
    if z > EXP_CLAMP:
        z = EXP_CLAMP
    elif z < -EXP_CLAMP:
        z = -EXP_CLAMP
    return 1.0 / (1.0 + math.exp(z))


def sigmoid_array(x, p: SigmoidParams) -> np.ndarray:
    """Vectorized twin of :func:`sigmoid` for batch replay."""
    z = np.clip(-p.w * np.asarray(x, dtype=float) + p.phi, -EXP_CLAMP, EXP_CLAMP)
    return 1.0 / (1.0 + np.exp(z))


@dataclass
class BiquadSpec:
    """Second-order Butterworth low-pass design point.

    The same section is used causally (order 2) and forward-backward
    (net order 4, zero phase).
    """

    cutoff_hz: float
    sample_rate_hz: float

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be > 0")
        if not 0 < self.cutoff_hz < self.sample_rate_hz / 2:
            raise ValueError(
                f"cutoff_hz must lie in (0, {self.sample_rate_hz / 2}), "
                f"got {self.cutoff_hz}"
            )


def butter2_lowpass_coeffs(spec: BiquadSpec) -> tuple[float, float, float, float, float]:
    """Coefficients (b0, b1, b2, a1, a2) of a 2nd-order Butterworth low-pass.

    Bilinear transform with cutoff pre-warping, Q = 1/sqrt(2); unit DC gain
    by construction and exactly -3 dB at the cutoff frequency.
    """
    omega = math.tan(math.pi * spec.cutoff_hz / spec.sample_rate_hz)
    q = 1.0 / math.sqrt(2.0)
    a0 = 1.0 + omega / q + omega * omega
    b0 = omega * omega / a0
    b1 = 2.0 * b0
    b2 = b0
    a1 = 2.0 * (omega * omega - 1.0) / a0
    a2 = (1.0 - omega / q + omega * omega) / a0
    return b0, b1, b2, a1, a2


class LowpassFilter:
    """Causal 2nd-order Butterworth low-pass, stepped one sample at a time.

    Direct form II transposed; state is owned by the caller's instance, so
    independent filters never interact.
    """

    def __init__(self, spec: BiquadSpec):
        self.spec = spec
        self.b0, self.b1, self.b2, self.a1, self.a2 = butter2_lowpass_coeffs(spec)
        self.z1 = 0.0
        self.z2 = 0.0

    def step(self, x: float) -> float:
        y = self.b0 * x + self.z1
        self.z1 = self.b1 * x - self.a1 * y + self.z2
        self.z2 = self.b2 * x - self.a2 * y
        return y

    def reset(self):
        self.z1 = 0.0
        self.z2 = 0.0

    def prime(self, value: float):
        """Set the internal state to the DC steady state for ``value``."""
        self.z1 = value * (1.0 - self.b0)
        self.z2 = value * (self.b2 - self.a2)


def zero_lag_pad_len(spec: BiquadSpec) -> int:
    """Reflect-pad length (one filter warm-up) used by :func:`lowpass_zero_lag`."""
    return int(math.ceil(2.0 * spec.sample_rate_hz / spec.cutoff_hz))


def lowpass_zero_lag(signal, spec: BiquadSpec) -> np.ndarray:
    """Zero-phase low-pass: forward-backward pass of the order-2 section.

    Net 4th-order magnitude response, zero phase. Edges are handled by
    mirror-padding one warm-up length and priming the filter state at the
    first padded sample, which suppresses end transients on short strides.

    Raises ``ValueError`` when the series is shorter than the warm-up length.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D series")
    pad = zero_lag_pad_len(spec)
    if x.size <= pad:
        raise ValueError(
            f"series of length {x.size} is too short for zero-lag filtering "
            f"(needs > {pad} samples at {spec.cutoff_hz} Hz cutoff)"
        )

    head = x[pad:0:-1]
    tail = x[-2:-pad - 2:-1]
    xp = np.concatenate([head, x, tail])

    def _one_pass(series):
        f = LowpassFilter(spec)
        f.prime(series[0])
        out = np.empty_like(series)
        for i, v in enumerate(series):
            out[i] = f.step(v)
        return out

    y = _one_pass(xp)
    y = _one_pass(y[::-1])[::-1]
    return y[pad:pad + x.size]


@dataclass
class EmaState:
    """Exponential moving average state; smoothing in (0, 1]."""

    smoothing: float
    value: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.smoothing <= 1.0:
            raise ValueError("smoothing must be in (0, 1]")


def ema_step(state: EmaState, sample: float) -> float:
    """One EMA update: value <- s*sample + (1-s)*value; returns the new value."""
    state.value = state.smoothing * sample + (1.0 - state.smoothing) * state.value
    return state.value


def integrate_positive(power, dt: float) -> float:
    """Trapezoidal integral of max(P, 0) over a uniform grid with spacing dt.

    Per-interval contributions are formed as dt/2*y[i] + dt/2*y[i+1] so that
    the positive and negative parts of a series partition the integral of
    |P| down to individual float products.
    """
    p = np.asarray(power, dtype=float)
    if p.size == 0:
        raise ValueError("empty power series")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not np.all(np.isfinite(p)):
        raise ValueError("power series must be finite")
    pos = np.maximum(p, 0.0)
    h = 0.5 * dt
    return float(np.sum(h * pos[:-1] + h * pos[1:]))


def clamp(x: float, lo: float, hi: float) -> float:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x
