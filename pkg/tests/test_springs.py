import math

import numpy as np
import pytest

from hipexo.signals import SigmoidParams
from hipexo.springs import (GaitSpringParams, JointSample, StsSpringParams,
                            gait_spring_torques, gait_torque,
                            gait_torque_series, gait_velocity_factors,
                            sts_modulated_torque, sts_spring_torque,
                            sts_torque_series)


def gait_params(**kw):
    base = dict(k_ext=50.0, k_flex=40.0, theta_ext_eq=0.1, theta_flex_eq=0.2,
                vel_mod_ext=SigmoidParams(-3.0, 2.0),
                vel_mod_flex=SigmoidParams(3.0, 1.0))
    base.update(kw)
    return GaitSpringParams(**base)


def sts_params(**kw):
    base = dict(k_sts=20.0, vel_mod=SigmoidParams(-4.0, 2.0),
                torso_mod=SigmoidParams(12.0, 6.0))
    base.update(kw)
    return StsSpringParams(**base)


def sample(theta=0.0, vel=0.0, thigh=0.0, torso=0.0):
    return JointSample(theta, vel, thigh, torso)


class TestGaitSprings:
    def test_extension_zero_at_equilibrium(self):
        tau_ext, _ = gait_spring_torques(sample(theta=0.1), gait_params())
        assert tau_ext == 0.0

    def test_extension_formula(self):
        p = gait_params(k_ext=50.0, theta_ext_eq=0.1)
        tau_ext, _ = gait_spring_torques(sample(theta=-0.3), p)
        assert tau_ext == pytest.approx(-20.0, abs=1e-12)

    def test_flexion_clamped_wrong_direction(self):
        p = gait_params(k_flex=40.0, theta_flex_eq=0.2)
        _, tau_flex = gait_spring_torques(sample(theta=0.5), p)
        assert tau_flex == 0.0

    def test_sts_zero_at_zero_thigh(self):
        assert sts_spring_torque(sample(thigh=0.0), sts_params()) == 0.0

    def test_sts_formula(self):
        assert sts_spring_torque(sample(thigh=0.8), sts_params(k_sts=20.0)) \
            == pytest.approx(-16.0, abs=1e-12)

    def test_sts_unidirectional(self):
        assert sts_spring_torque(sample(thigh=-0.2), sts_params(k_sts=77.0)) == 0.0

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            gait_params(k_ext=-1.0)
        with pytest.raises(ValueError):
            gait_params(theta_ext_eq=2.5)  # outside joint range
        with pytest.raises(ValueError):
            sts_params(k_sts=-0.1)

    def test_velocity_sanity_bound(self):
        with pytest.raises(ValueError):
            sample(vel=30.0)


class TestVelocityFactors:
    def test_midpoint_at_zero(self):
        p = gait_params(vel_mod_ext=SigmoidParams(-3.0, 0.0),
                        vel_mod_flex=SigmoidParams(3.0, 0.0))
        eta_ext, eta_flex = gait_velocity_factors(sample(vel=0.0), p)
        assert eta_ext == pytest.approx(0.5, abs=1e-12)
        assert eta_flex == pytest.approx(0.5, abs=1e-12)

    def test_extension_factor_saturates_during_extension(self):
        p = gait_params(vel_mod_ext=SigmoidParams(-3.0, 2.0))
        eta_ext, _ = gait_velocity_factors(sample(vel=-50.0 / 3.0), p)
        assert eta_ext > 0.999999

    def test_closed_form(self):
        p = gait_params(vel_mod_flex=SigmoidParams(3.0, 1.0))
        _, eta_flex = gait_velocity_factors(sample(vel=1.0), p)
        assert eta_flex == pytest.approx(1.0 / (1.0 + math.exp(-2.0)), abs=1e-12)


class TestComposedTorques:
    def test_zero_torques_give_zero(self):
        p = gait_params()
        assert gait_torque(sample(theta=0.15), p) == pytest.approx(
            gait_velocity_factors(sample(theta=0.15), p)[1]
            * gait_spring_torques(sample(theta=0.15), p)[1])

    def test_weighted_sum(self):
        p = gait_params(theta_ext_eq=0.1, k_ext=50.0,
                        vel_mod_ext=SigmoidParams(-3.0, 0.0),
                        vel_mod_flex=SigmoidParams(3.0, 0.0))
        s = sample(theta=-0.3)  # tau_ext = -20, tau_flex = 40*(0.2+0.3) = 20
        tau = gait_torque(s, p)
        assert tau == pytest.approx(0.5 * -20.0 + 0.5 * 20.0, abs=1e-12)

    def test_sts_modulated_formula(self):
        p = sts_params(k_sts=20.0, vel_mod=SigmoidParams(-4.0, 0.0),
                       torso_mod=SigmoidParams(12.0, 0.0))
        s = sample(thigh=0.8)  # tau_sts = -16, both factors 0.5 at zero input
        assert sts_modulated_torque(s, p) == pytest.approx(-4.0, abs=1e-12)

    def test_sts_torso_floor_when_upright(self):
        # torso input clamps at 0: factor = 1/(1+e^phi), a fixed floor
        p = sts_params(torso_mod=SigmoidParams(12.0, 6.0))
        floor = 1.0 / (1.0 + math.exp(6.0))
        s_upright = sample(thigh=0.8, vel=-1.0, torso=-0.4)
        s_zero = sample(thigh=0.8, vel=-1.0, torso=0.0)
        assert sts_modulated_torque(s_upright, p) == sts_modulated_torque(s_zero, p)
        base = sts_spring_torque(s_upright, p)
        assert abs(sts_modulated_torque(s_upright, p)) <= abs(base) * floor * 1.0001
        assert abs(sts_modulated_torque(s_upright, p)) < 0.003 * abs(base)

    def test_sts_zero_passthrough(self):
        assert sts_modulated_torque(sample(thigh=-0.5, vel=-3.0, torso=0.5),
                                    sts_params()) == 0.0


class TestProperties:
    def _random_params(self, rng):
        return (
            gait_params(
                k_ext=rng.uniform(0, 120), k_flex=rng.uniform(0, 120),
                theta_ext_eq=rng.uniform(-1.0, 2.2),
                theta_flex_eq=rng.uniform(-1.0, 2.2),
                vel_mod_ext=SigmoidParams(rng.uniform(-10, 10), rng.uniform(-6, 6)),
                vel_mod_flex=SigmoidParams(rng.uniform(-10, 10), rng.uniform(-6, 6))),
            sts_params(
                k_sts=rng.uniform(0, 80),
                vel_mod=SigmoidParams(rng.uniform(-10, 10), rng.uniform(-6, 6)),
                torso_mod=SigmoidParams(rng.uniform(-10, 10), rng.uniform(-6, 6))),
        )

    def test_sign_correctness_fuzz(self):
        rng = np.random.default_rng(42)
        for _ in range(400):
            gp, sp = self._random_params(rng)
            for _ in range(25):
                s = sample(theta=rng.uniform(-1.5, 2.0),
                           vel=rng.uniform(-20, 20),
                           thigh=rng.uniform(-1.5, 2.0),
                           torso=rng.uniform(-1.0, 1.0))
                tau_ext, tau_flex = gait_spring_torques(s, gp)
                assert tau_ext <= 0.0
                assert tau_flex >= 0.0
                assert sts_spring_torque(s, sp) <= 0.0
                assert sts_modulated_torque(s, sp) <= 0.0

    def test_modulation_never_amplifies(self):
        rng = np.random.default_rng(43)
        for _ in range(500):
            gp, sp = self._random_params(rng)
            s = sample(theta=rng.uniform(-1.5, 2.0), vel=rng.uniform(-20, 20),
                       thigh=rng.uniform(-1.5, 2.0), torso=rng.uniform(-1, 1))
            tau_ext, tau_flex = gait_spring_torques(s, gp)
            assert abs(gait_torque(s, gp)) <= abs(tau_ext) + abs(tau_flex) + 1e-12
            assert abs(sts_modulated_torque(s, sp)) <= abs(sts_spring_torque(s, sp)) + 1e-12

    def test_continuity_on_fine_grid(self):
        gp = gait_params()
        thetas = np.linspace(-0.8, 1.2, 4000)
        taus = [gait_torque(sample(theta=t, vel=0.3), gp) for t in thetas]
        dtheta = thetas[1] - thetas[0]
        k_bound = (gp.k_ext + gp.k_flex) * dtheta * 1.01
        assert np.max(np.abs(np.diff(taus))) <= k_bound

    def test_zero_kinematics_closed_form_crosscheck(self):
        # independent scalar evaluation of every basis magnitude at rest
        gp = gait_params()
        sp = sts_params()
        s = sample()
        eta_ext = 1.0 / (1.0 + math.exp(-(-3.0 * 0.0) + 2.0))
        eta_flex = 1.0 / (1.0 + math.exp(-(3.0 * 0.0) + 1.0))
        tau_ext_expect = min(0.0, 50.0 * (0.0 - 0.1))
        tau_flex_expect = max(0.0, 40.0 * (0.2 - 0.0))
        assert gait_spring_torques(s, gp) == (tau_ext_expect, tau_flex_expect)
        assert gait_torque(s, gp) == pytest.approx(
            eta_ext * tau_ext_expect + eta_flex * tau_flex_expect, abs=1e-12)
        assert sts_modulated_torque(s, sp) == 0.0

    def test_series_matches_scalar_path(self):
        rng = np.random.default_rng(44)
        gp, sp = self._random_params(rng)
        theta = rng.uniform(-1.0, 1.5, 64)
        vel = rng.uniform(-15, 15, 64)
        thigh = rng.uniform(-1.0, 1.5, 64)
        torso = rng.uniform(-0.5, 0.8, 64)
        gait_vec = gait_torque_series(theta, vel, gp)
        sts_vec = sts_torque_series(thigh, vel, torso, sp)
        for i in range(64):
            s = JointSample(theta[i], vel[i], thigh[i], torso[i])
            assert gait_torque(s, gp) == pytest.approx(gait_vec[i], abs=1e-12)
            assert sts_modulated_torque(s, sp) == pytest.approx(sts_vec[i], abs=1e-12)
