"""Rule-based heel-strike detection from thigh-normal acceleration with a
pelvis-deceleration fallback.

Each channel runs an adaptive threshold (running median + k * MAD over a
trailing window) with a causal local-maximum confirmation. The thigh
channels attribute events to their own side; pelvis events are attributed to
the leading leg (greater thigh flexion at the peak sample). A per-side
refractory window suppresses duplicates. Thresholds are relative to the
stream's own statistics, so scaling a stream by any positive constant leaves
the detected event set unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modulation import BilateralSample

LEFT = "left"
RIGHT = "right"

SOURCE_THIGH = "thigh-channel"
SOURCE_PELVIS = "pelvis-channel"
SOURCE_FUSED = "fused"


@dataclass
class ImuFrame:
    """One time step of the acceleration channels used for detection.

    thigh values are thigh-normal linear accelerations; pelvis_accel is the
    magnitude of the high-pass residual of pelvis acceleration.
    """

    thigh_accel_l: float
    thigh_accel_r: float
    pelvis_accel: float
    timestamp: float

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in
                   (self.thigh_accel_l, self.thigh_accel_r,
                    self.pelvis_accel, self.timestamp))


@dataclass
class HsEvent:
    side: str                       # "left" | "right"
    timestamp: float                # s, at the acceleration peak
    thigh_snapshot: BilateralSample
    source: str                     # thigh-channel | pelvis-channel | fused


@dataclass
class HsDetectorConfig:
    k_mad: float = 4.0            # threshold = median + k_mad * MAD
    window_s: float = 2.0         # trailing statistics window
    refractory_s: float = 0.4     # min spacing of same-side events
    confirm_samples: int = 3      # local-max confirmation length
    warmup_s: float = 0.5         # min buffered history before detecting
    refresh_every: int = 5        # samples between threshold recomputes

    def __post_init__(self):
        if self.k_mad <= 0 or self.window_s <= 0 or self.refractory_s <= 0:
            raise ValueError("k_mad, window_s, refractory_s must be > 0")
        if self.confirm_samples < 1 or self.refresh_every < 1:
            raise ValueError("confirm_samples and refresh_every must be >= 1")


class _Channel:
    """Adaptive threshold + local-max candidate tracking for one channel."""

    def __init__(self, window: int, warmup: int, k_mad: float,
                 refresh: int, confirm: int):
        self.buf = np.zeros(window)
        self.count = 0  # total samples seen
        self.idx = 0
        self.warmup = warmup
        self.k_mad = k_mad
        self.refresh = refresh
        self.confirm = confirm
        self.threshold = math.inf
        self.last_above_t = -math.inf
        # pending local-max candidate; age < 0 means no candidate
        self.cand_value = 0.0
        self.cand_t = 0.0
        self.cand_snapshot: BilateralSample | None = None
        self.cand_age = -1

    def _update_threshold(self):
        n = min(self.count, self.buf.size)
        data = self.buf if n == self.buf.size else self.buf[:n]
        med = float(np.median(data))
        mad = float(np.median(np.abs(data - med)))
        self.threshold = med + self.k_mad * mad

    def push(self, value: float, t: float,
             snapshot: BilateralSample) -> tuple[float, BilateralSample] | None:
        """Feed one sample; returns (peak_time, peak_snapshot) on confirmation."""
        # compare against the threshold from before this sample enters the
        # statistics window (keeps the test causal)
        confirmed = None
        if self.count >= self.warmup:
            if value > self.threshold:
                self.last_above_t = t
                if self.cand_age < 0 or value > self.cand_value:
                    # new peak (or higher peak supersedes the pending one)
                    self.cand_value = value
                    self.cand_t = t
                    self.cand_snapshot = snapshot
                    self.cand_age = 0
                else:
                    self.cand_age += 1
            elif self.cand_age >= 0:
                self.cand_age += 1
            if self.cand_age >= self.confirm:
                confirmed = (self.cand_t, self.cand_snapshot)
                self.cand_age = -1

        self.buf[self.idx] = value
        self.idx = (self.idx + 1) % self.buf.size
        self.count += 1
        if self.count >= self.warmup and self.count % self.refresh == 0:
            self._update_threshold()
        return confirmed

    def reset(self):
        self.count = 0
        self.idx = 0
        self.threshold = math.inf
        self.last_above_t = -math.inf
        self.cand_age = -1


class HsDetector:
    """Streaming heel-strike detector over thigh and pelvis channels.

    Parameters
    ----------
    rate_hz : float
        Nominal frame rate of the stream (sets window lengths in samples).
    config : HsDetectorConfig, optional
        Thresholding, confirmation, and refractory settings.
    """

    def __init__(self, rate_hz: float, config: HsDetectorConfig | None = None):
        if not rate_hz > 0:
            raise ValueError("rate_hz must be > 0")
        self.rate_hz = rate_hz
        self.config = config or HsDetectorConfig()
        c = self.config
        window = max(8, int(round(c.window_s * rate_hz)))
        warmup = max(4, int(round(c.warmup_s * rate_hz)))

        def make():
            return _Channel(window, warmup, c.k_mad, c.refresh_every,
                            c.confirm_samples)

        self._thigh = {LEFT: make(), RIGHT: make()}
        self._pelvis = make()
        self._last_event_t = {LEFT: -math.inf, RIGHT: -math.inf}
        self._last_t: float | None = None
        self._pending: list[HsEvent] = []

    def refractory_ok(self, side: str, timestamp: float) -> bool:
        """True iff an event at ``timestamp`` respects the per-side refractory."""
        return timestamp - self._last_event_t[side] >= self.config.refractory_s

    def update(self, frame: ImuFrame, bilateral: BilateralSample) -> HsEvent | None:
        """Feed one frame; returns at most one heel-strike event.

        Raises ``ValueError`` on non-monotonic timestamps.
        """
        if self._last_t is not None and frame.timestamp <= self._last_t:
            raise ValueError(
                f"non-monotonic timestamp {frame.timestamp} after {self._last_t}"
            )
        self._last_t = frame.timestamp

        t = frame.timestamp
        hits: list[tuple[float, str, str, BilateralSample]] = []

        for side in (LEFT, RIGHT):
            value = frame.thigh_accel_l if side == LEFT else frame.thigh_accel_r
            confirmed = self._thigh[side].push(value, t, bilateral)
            if confirmed is not None:
                hits.append((confirmed[0], side, SOURCE_THIGH, confirmed[1]))

        confirmed = self._pelvis.push(frame.pelvis_accel, t, bilateral)
        if confirmed is not None:
            peak_t, snap = confirmed
            # leading leg: greater thigh flexion at the peak sample
            side = LEFT if snap.theta_thigh_l >= snap.theta_thigh_r else RIGHT
            hits.append((peak_t, side, SOURCE_PELVIS, snap))

        for peak_t, side, source, snap in sorted(hits, key=lambda h: h[0]):
            if not self.refractory_ok(side, peak_t):
                continue
            self._last_event_t[side] = peak_t
            if source == SOURCE_THIGH:
                fuse_window = (self.config.confirm_samples + 1) / self.rate_hz
                if peak_t - self._pelvis.last_above_t <= fuse_window:
                    source = SOURCE_FUSED
            self._pending.append(HsEvent(side=side, timestamp=peak_t,
                                         thigh_snapshot=snap, source=source))
        if self._pending:
            return self._pending.pop(0)
        return None

    def reset(self):
        for ch in (*self._thigh.values(), self._pelvis):
            ch.reset()
        self._last_event_t = {LEFT: -math.inf, RIGHT: -math.inf}
        self._last_t = None
        self._pending = []


def match_events(detected: list[HsEvent], truth: list[tuple[str, float]],
                 tol_s: float = 0.03) -> dict:
    """Score detected events against ground-truth (side, time) pairs.

    Greedy one-to-one matching within ``tol_s``. Empty truth gives vacuous
    recall 1.0; empty detection gives vacuous precision 1.0.
    """
    unmatched = list(range(len(truth)))
    errors = []
    tp = 0
    for ev in detected:
        best = None
        best_err = tol_s
        for j in unmatched:
            side, t_true = truth[j]
            if side != ev.side:
                continue
            err = abs(ev.timestamp - t_true)
            if err <= best_err:
                best = j
                best_err = err
        if best is not None:
            unmatched.remove(best)
            errors.append(ev.timestamp - truth[best][1])
            tp += 1
    precision = tp / len(detected) if detected else 1.0
    recall = tp / len(truth) if truth else 1.0
    return {"precision": precision, "recall": recall,
            "true_positives": tp, "timing_errors": errors}
