import numpy as np
import numpy.testing as npt
import pytest

from vtolsim.config import theta_nominal
from vtolsim.forcemodel import AeroConstants, SideForceShape
from vtolsim.sensors import ProbeCal
from vtolsim.sysid import (GaussianPrior, RankDeficientError, TunnelDataset,
                           fit_aero_linear, fit_probe_gain, fit_sideforce,
                           fit_thrust, synth_probe_sweep, synth_tunnel_data)

CONST = AeroConstants()
SHAPE = SideForceShape()
THETA = theta_nominal()

ALPHAS = np.deg2rad(np.arange(-45, 46, 5))
SPEEDS = np.array([3.0, 6.0, 9.0])


def wing_data(sigma, rng, alphas=ALPHAS, speeds=SPEEDS):
    return synth_tunnel_data(THETA, CONST, SHAPE, speeds, alphas, [0.0], sigma, rng)


def rotor_data(sigma, rng):
    return synth_tunnel_data(THETA, CONST, SHAPE, [0.0, 3.0, 6.0, 9.0],
                             np.deg2rad(np.arange(-45, 46, 15)),
                             [0.4, 0.6, 0.8], sigma, rng)


class TestSynthData:
    def test_noise_free_matches_model(self, rng):
        ds = wing_data(0.0, rng)
        from vtolsim.forcemodel import airflow_angles, flow_from_angles, predict_forces, regressor
        i = 7
        vi = flow_from_angles(ds.v_inf[i], ds.alpha[i], 0.0)
        phi = regressor(airflow_angles(vi), 0.0, 0.0, CONST, SHAPE)
        f, _, _ = predict_forces(phi, THETA)
        npt.assert_allclose(ds.force[i], CONST.mass * f, atol=1e-12)

    def test_zero_speed_rows_have_no_aero_force(self, rng):
        ds = synth_tunnel_data(THETA, CONST, SHAPE, [0.0], ALPHAS, [0.0], 0.0, rng)
        npt.assert_allclose(ds.force, 0.0, atol=1e-12)

    def test_noise_level(self, rng):
        clean = wing_data(0.0, np.random.default_rng(0))
        noisy = synth_tunnel_data(THETA, CONST, SHAPE, SPEEDS, ALPHAS, [0.0],
                                  0.05, np.random.default_rng(0))
        resid = (noisy.force - clean.force).ravel()
        assert np.std(resid) == pytest.approx(0.05, rel=0.10)

    def test_csv_roundtrip(self, rng, tmp_path):
        ds = wing_data(0.02, rng)
        path = tmp_path / "tunnel.csv"
        ds.to_csv(path)
        back = TunnelDataset.from_csv(path)
        npt.assert_allclose(back.force, ds.force, rtol=1e-10)
        npt.assert_allclose(back.alpha, ds.alpha, rtol=1e-10)
        assert path.read_text().splitlines()[0] == "V,alpha,u,Fx,Fy,Fz,sigma"

    def test_deterministic_under_seed(self):
        a = wing_data(0.05, np.random.default_rng(3))
        b = wing_data(0.05, np.random.default_rng(3))
        npt.assert_array_equal(a.force, b.force)


class TestAeroFit:
    TRUTH = THETA[[6, 7, 3, 4, 5]]  # lift then drag coefficients

    def test_noise_free_recovery(self, rng):
        fit = fit_aero_linear(wing_data(0.0, rng))
        expect = np.array([THETA[6], THETA[7], THETA[3], THETA[4], THETA[5]])
        npt.assert_allclose(fit.mean, expect, atol=1e-8)

    def test_coverage_calibration(self):
        # posterior mean within 3 posterior stds of truth in >= 99% of trials
        expect = np.array([THETA[6], THETA[7], THETA[3], THETA[4], THETA[5]])
        hits = 0
        n = 100
        for seed in range(n):
            ds = wing_data(0.05, np.random.default_rng(seed))
            fit = fit_aero_linear(ds)
            if np.all(np.abs(fit.mean - expect) <= 3.0 * fit.std):
                hits += 1
        assert hits >= 99

    def test_posterior_contraction_with_data(self):
        small = wing_data(0.05, np.random.default_rng(1))
        big = small.extend(wing_data(0.05, np.random.default_rng(2)))
        f_small = fit_aero_linear(small)
        f_big = fit_aero_linear(big)
        assert np.all(f_big.std < f_small.std)
        ratio = f_small.std / f_big.std
        npt.assert_allclose(ratio, np.sqrt(2.0), atol=0.25)

    def test_rank_deficiency_detected(self, rng):
        ds = wing_data(0.01, rng, alphas=np.array([0.1, 0.1, 0.1]), speeds=[9.0] * 10)
        with pytest.raises(RankDeficientError):
            fit_aero_linear(ds)

    def test_needs_wing_rows(self, rng):
        with pytest.raises(RankDeficientError):
            fit_aero_linear(rotor_data(0.0, rng))


class TestSideForceFit:
    def test_noise_free_grid_recovery(self, rng):
        fit = fit_sideforce(rotor_data(0.0, rng))
        assert abs(fit.k1 - SHAPE.k1) <= 0.005 + 1e-12
        assert abs(fit.k2 - SHAPE.k2) <= 0.05 + 1e-12
        assert fit.c_s == pytest.approx(THETA[2], rel=0.02)

    def test_self_consistency(self, rng):
        # refitting data generated from the fitted triple returns the triple
        fit = fit_sideforce(rotor_data(0.0, rng))
        theta2 = THETA.copy()
        theta2[2] = fit.c_s
        shape2 = SideForceShape(k1=fit.k1, k2=fit.k2, d=SHAPE.d)
        ds2 = synth_tunnel_data(theta2, CONST, shape2, [0.0, 3.0, 6.0, 9.0],
                                np.deg2rad(np.arange(-45, 46, 15)),
                                [0.4, 0.6, 0.8], 0.0, rng)
        fit2 = fit_sideforce(ds2)
        assert abs(fit2.k1 - fit.k1) <= 0.01
        assert abs(fit2.k2 - fit.k2) <= 0.1

    def test_basis_carries_zeros_and_offset_peak(self):
        from vtolsim.forcemodel import sideforce_basis
        a = np.linspace(-np.pi / 2, np.pi / 2, 721)
        g = np.array([sideforce_basis(x, 9.0, 0.6, SHAPE) for x in a])
        assert g[0] == pytest.approx(0.0, abs=1e-12)
        assert g[-1] == pytest.approx(0.0, abs=1e-12)
        assert abs(a[int(np.argmax(np.abs(g)))]) > 0.05  # peak away from zero

    def test_deterministic(self):
        f1 = fit_sideforce(rotor_data(0.02, np.random.default_rng(5)))
        f2 = fit_sideforce(rotor_data(0.02, np.random.default_rng(5)))
        assert (f1.k1, f1.k2, f1.c_s) == (f2.k1, f2.k2, f2.c_s)


class TestThrustFit:
    def test_recovers_vertical_coefficient(self, rng):
        fit = fit_thrust(rotor_data(0.0, rng))
        assert fit.mean[0] == pytest.approx(THETA[1], rel=1e-6)


class TestProbeGainFit:
    ANGLES = np.deg2rad(np.linspace(-20, 20, 17))

    def test_noise_free_exact(self):
        cal = ProbeCal(k=2.0, noise_pa=0.0)
        readings = synth_probe_sweep(self.ANGLES, 9.0, cal)
        fit = fit_probe_gain(self.ANGLES, readings)
        assert fit.k == pytest.approx(2.0, abs=1e-6)

    def test_noisy_within_two_percent(self):
        cal = ProbeCal(k=2.0, noise_pa=0.2)
        errs = []
        for seed in range(20):
            readings = synth_probe_sweep(self.ANGLES, 9.0, cal,
                                         np.random.default_rng(seed))
            fit = fit_probe_gain(self.ANGLES, readings)
            errs.append(abs(fit.k - 2.0) / 2.0)
        assert np.median(errs) < 0.02

    def test_linearity_residual_small(self):
        cal = ProbeCal(k=2.0, noise_pa=0.2)
        readings = synth_probe_sweep(self.ANGLES, 9.0, cal, np.random.default_rng(0))
        fit = fit_probe_gain(self.ANGLES, readings)
        assert fit.linearity_residual < 0.02

    def test_beta_channel(self):
        cal = ProbeCal(k=2.0, noise_pa=0.0)
        readings = synth_probe_sweep(self.ANGLES, 9.0, cal, channel="beta")
        fit = fit_probe_gain(self.ANGLES, readings, channel="beta")
        assert fit.k == pytest.approx(2.0, abs=1e-6)

    def test_needs_enough_angles(self):
        cal = ProbeCal(k=2.0, noise_pa=0.0)
        angles = np.deg2rad([0.0, 5.0])
        readings = synth_probe_sweep(angles, 9.0, cal)
        with pytest.raises(ValueError):
            fit_probe_gain(angles, readings)
