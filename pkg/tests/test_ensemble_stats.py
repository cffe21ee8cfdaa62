import numpy as np
import pytest

from oscbath import (
    ConfigurationError,
    ConstantVelocity,
    ParameterError,
    ParticleInit,
    Trajectory,
    compare_trajectories,
    fdt_check,
    integrate_langevin_white,
    parse_scenario,
    realization_stream,
    run_ensemble,
    simulate,
)
from oscbath.ensemble_stats import _Moments, coarse_grid, fit_relaxation

BASE = """
[particle]
mass = 1.0
v0 = {v0}
[bath]
density = "white_noise"
eta = 1.0
cutoff = 20.0
n_osc = 64
[environment]
temperature = 1.0
v = {venv}
[integrator]
dt = {dt}
horizon = {horizon}
[ensemble]
M = 100
engine = "{engine}"
"""


def scenario(engine="langevin", v0=0.0, venv=0.0, dt=0.01, horizon=5.0):
    return parse_scenario(BASE.format(engine=engine, v0=v0, venv=venv, dt=dt, horizon=horizon))


class TestRunEnsemble:
    @pytest.mark.parametrize("engine", ["langevin", "full", "gle"])
    def test_single_realization(self, engine):
        scn = scenario(engine, v0=0.5, horizon=1.0)
        rep = run_ensemble(scn, 1, 77)
        traj, _ = simulate(scn, engine, 77)
        np.testing.assert_array_equal(rep.x_mean, traj.x)
        np.testing.assert_array_equal(rep.v_mean, traj.v)
        assert np.all(np.isnan(rep.x_se)) and np.all(np.isnan(rep.v_var))
        assert rep.checks == []

    def test_langevin_realization_matches_direct_call(self):
        scn = scenario(horizon=1.0)
        traj, _ = simulate(scn, "langevin", 5, index=3)
        direct = integrate_langevin_white(scn.particle, 1.0, 1.0, ParticleInit(scn.x0, scn.v0), scn.profile,
                                          scn.dt, scn.n_steps, realization_stream(5, 3))
        np.testing.assert_array_equal(traj.x, direct.x)

    @pytest.mark.parametrize("engine", ["langevin", "full"])
    def test_independent_of_thread_count(self, engine):
        scn = scenario(engine, horizon=1.0)
        a = run_ensemble(scn, 300, 3, threads=1, batch_size=64)
        b = run_ensemble(scn, 300, 3, threads=4, batch_size=64)
        for name in ("x_mean", "x_se", "v_mean", "v_var", "msd"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_standard_error_scaling(self):
        scn = scenario(horizon=3.0)
        se1 = run_ensemble(scn, 2000, 1).x_se[100:].mean()
        se2 = run_ensemble(scn, 4000, 2).x_se[100:].mean()
        assert se1 / se2 == pytest.approx(np.sqrt(2), rel=0.10)

    def test_moving_bath_drift_full_and_gle(self):
        full = run_ensemble(scenario("full", venv=1.0, horizon=10.0), 10_000, 8)
        assert abs(full.window_v_mean - 1.0) <= 3 * full.window_v_se
        gle = run_ensemble(scenario("gle", venv=1.0, horizon=10.0), 1000, 8)
        assert abs(gle.window_v_mean - 1.0) <= 3 * gle.window_v_se

    def test_bath_engines_agree_on_shared_realizations(self):
        scn = scenario("full", venv=1.0, dt=0.002, horizon=2.0)
        full = run_ensemble(scn, 20, 4, engine="full")
        gle = run_ensemble(scn, 20, 4, engine="gle")
        assert np.max(np.abs(full.x_mean - gle.x_mean)) < 1e-3

    def test_noise_tables_for_bath_engines(self):
        rep = run_ensemble(scenario("full", horizon=2.0), 500, 2)
        assert rep.RR_mean.shape == (rep.noise_t.size, rep.noise_t.size)
        assert rep.noise_t.size <= 32
        assert {c.metric for c in rep.checks} >= {"noise_covariance_max_dev", "noise_mean_max_abs"}

    def test_invalid(self):
        with pytest.raises(ParameterError):
            run_ensemble(scenario(), 0, 1)
        with pytest.raises(ConfigurationError):
            run_ensemble(scenario(), 10, 1, engine="bogus")


class TestFdtCheck:
    def test_zero_temperature(self, wn_bath64):
        rep = fdt_check(wn_bath64, 0.0, 100, np.linspace(0, 2, 8))
        assert np.all(rep.R_mean == 0) and np.all(rep.RR_mean == 0)
        assert rep.passed

    def test_moving_environment_statistics_unchanged(self, wn_bath64):
        grid = np.linspace(0, 2, 8)
        a = fdt_check(wn_bath64, 1.0, 500, grid, base_seed=4)
        b = fdt_check(wn_bath64, 1.0, 500, grid, ConstantVelocity(3.0), base_seed=4)
        np.testing.assert_allclose(b.RR_mean, a.RR_mean, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(b.R_mean, a.R_mean, atol=1e-12)

    def test_requires_enough_samples(self, wn_bath64):
        with pytest.raises(ParameterError):
            fdt_check(wn_bath64, 1.0, 99, [0.0, 1.0])

    def test_grid_limit(self, wn_bath64):
        with pytest.raises(ConfigurationError):
            fdt_check(wn_bath64, 1.0, 100, np.linspace(0, 1, 40))
        rep = fdt_check(wn_bath64, 1.0, 100, np.linspace(0, 1, 40), full_resolution=True)
        assert rep.RR_mean.shape == (40, 40)

    def test_coarse_grid(self):
        g = coarse_grid(np.linspace(0, 10, 10001), 32)
        assert g.size == 32 and g[0] == 0 and g[-1] == 10


class TestCompareTrajectories:
    def _traj(self, x):
        t = np.linspace(0, 1, len(x))
        return Trajectory(t, np.asarray(x, float), np.zeros(len(x)))

    def test_identical(self):
        a = self._traj([0.0, 1.0, 3.0])
        assert compare_trajectories(a, a) == {"rms": 0.0, "max_abs": 0.0}

    def test_offset(self):
        a = self._traj([0.0, 1.0, 3.0])
        b = self._traj([0.5, 1.5, 3.5])
        d = compare_trajectories(a, b)
        assert d["rms"] == pytest.approx(0.5) and d["max_abs"] == pytest.approx(0.5)

    def test_grid_mismatch(self):
        with pytest.raises(ConfigurationError):
            compare_trajectories(self._traj([0, 1, 2]), self._traj([0, 1]))


class TestEstimators:
    def test_chan_merge_matches_direct(self, rng):
        data = rng.normal(size=(257, 3))
        merged = _Moments.of(data[:100]).merge(_Moments.of(data[100:200])).merge(_Moments.of(data[200:]))
        np.testing.assert_allclose(merged.mean, data.mean(axis=0), rtol=1e-13)
        np.testing.assert_allclose(merged.var, data.var(axis=0, ddof=1), rtol=1e-12)

    def test_fit_relaxation_exact_exponential(self):
        t = np.linspace(0, 5, 501)
        A, rate = fit_relaxation(t, -2.0 * np.exp(-1.7 * t))
        assert rate == pytest.approx(1.7, rel=1e-8) and A == pytest.approx(-2.0, rel=1e-8)
