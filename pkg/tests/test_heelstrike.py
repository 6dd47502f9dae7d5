import numpy as np
import pytest

from hipexo.gaitdata import synth_imu_stream
from hipexo.heelstrike import (HsDetector, HsDetectorConfig, ImuFrame,
                               match_events)
from hipexo.modulation import BilateralSample

RATE = 250.0


def run_stream(frames, detector=None, scale=1.0):
    det = detector or HsDetector(RATE)
    events = []
    for i in range(len(frames["t"])):
        f = ImuFrame(scale * frames["thigh_accel_l"][i],
                     scale * frames["thigh_accel_r"][i],
                     scale * frames["pelvis_accel"][i],
                     frames["t"][i])
        b = BilateralSample.from_thighs(frames["thigh_angle_l"][i],
                                        frames["thigh_angle_r"][i],
                                        0.0, frames["t"][i])
        ev = det.update(f, b)
        if ev is not None:
            events.append(ev)
    return events


class TestDetection:
    def test_walking_impulse_train(self):
        # 1 Hz per-side impulse train over 60 s: close to 60 events per side
        frames, truth = synth_imu_stream(60.0, seed=1, stride_period_s=1.0)
        events = run_stream(frames)
        scores = match_events(events, truth, tol_s=0.03)
        assert scores["recall"] >= 0.99
        assert scores["precision"] >= 0.99
        assert max(abs(e) for e in scores["timing_errors"]) <= 0.03
        for side in ("left", "right"):
            per_side = sum(1 for e in events if e.side == side)
            assert 50 <= per_side <= 62

    def test_flat_zero_stream_no_events(self):
        n = int(20 * RATE)
        frames = {"t": np.arange(n) / RATE,
                  "thigh_accel_l": np.zeros(n), "thigh_accel_r": np.zeros(n),
                  "pelvis_accel": np.zeros(n),
                  "thigh_angle_l": np.zeros(n), "thigh_angle_r": np.zeros(n)}
        assert run_stream(frames) == []

    def test_attenuated_thigh_caught_by_pelvis(self):
        frames, truth = synth_imu_stream(60.0, seed=2, thigh_spike=7.5,
                                         pelvis_spike=18.0)
        events = run_stream(frames)
        scores = match_events(events, truth, tol_s=0.03)
        assert scores["recall"] >= 0.95
        assert all(e.source in ("pelvis-channel", "fused") for e in events)
        assert any(e.source == "pelvis-channel" for e in events)

    def test_amplitude_scale_invariance_exact(self):
        frames, _ = synth_imu_stream(30.0, seed=3)
        base = run_stream(frames, scale=1.0)
        for c in (0.01, 3.7, 1e4):
            scaled = run_stream(frames, scale=c)
            assert len(scaled) == len(base)
            for a, b in zip(base, scaled):
                assert (a.side, a.timestamp, a.source) == \
                    (b.side, b.timestamp, b.source)

    def test_pelvis_events_attributed_to_leading_leg(self):
        frames, truth = synth_imu_stream(40.0, seed=4, thigh_spike=7.5,
                                         pelvis_spike=18.0)
        events = run_stream(frames)
        scores = match_events(events, truth, tol_s=0.03)
        # side matching is part of match_events, so recall checks attribution
        assert scores["recall"] >= 0.95


class TestStreamContract:
    def test_non_monotonic_timestamps_rejected(self):
        det = HsDetector(RATE)
        b = BilateralSample.from_thighs(0.0, 0.0, 0.0, 0.0)
        det.update(ImuFrame(0, 0, 0, 0.0), b)
        with pytest.raises(ValueError):
            det.update(ImuFrame(0, 0, 0, 0.0), b)

    def test_refractory_window_enforced_on_stream(self):
        frames, _ = synth_imu_stream(60.0, seed=5)
        events = run_stream(frames)
        for side in ("left", "right"):
            ts = [e.timestamp for e in events if e.side == side]
            assert all(b - a >= 0.4 for a, b in zip(ts, ts[1:]))

    def test_causal_detection_latency(self):
        # event timestamps never precede the data that produced them by more
        # than the local-max confirmation window
        cfg = HsDetectorConfig(confirm_samples=3)
        det = HsDetector(RATE, cfg)
        frames, _ = synth_imu_stream(20.0, seed=6)
        for i in range(len(frames["t"])):
            t = frames["t"][i]
            f = ImuFrame(frames["thigh_accel_l"][i], frames["thigh_accel_r"][i],
                         frames["pelvis_accel"][i], t)
            b = BilateralSample.from_thighs(frames["thigh_angle_l"][i],
                                            frames["thigh_angle_r"][i], 0.0, t)
            ev = det.update(f, b)
            if ev is not None:
                assert t - ev.timestamp <= (cfg.confirm_samples + 1) / RATE + 1e-9


class TestRefractoryCheck:
    def test_first_event_always_allowed(self):
        det = HsDetector(RATE)
        assert det.refractory_ok("left", 0.0)
        assert det.refractory_ok("right", -100.0)

    def test_boundary_arithmetic(self):
        det = HsDetector(RATE, HsDetectorConfig(refractory_s=0.4))
        det._last_event_t["left"] = 10.0
        assert not det.refractory_ok("left", 10.2)
        assert det.refractory_ok("left", 10.41)
        assert det.refractory_ok("left", 10.4)  # >= is inclusive


class TestMatchEvents:
    def test_empty_cases(self):
        assert match_events([], [])["precision"] == 1.0
        assert match_events([], [])["recall"] == 1.0
        assert match_events([], [("left", 1.0)])["recall"] == 0.0

    def test_zero_truth_with_detections_gives_zero_precision(self):
        b = BilateralSample.from_thighs(0.0, 0.0, 0.0, 1.0)
        from hipexo.heelstrike import HsEvent
        det = [HsEvent("left", 1.0, b, "thigh-channel")]
        scores = match_events(det, [])
        assert scores["precision"] == 0.0
        assert scores["recall"] == 1.0
