import numpy as np
import pytest

from oscbath import (
    BathState,
    ConfigurationError,
    ConstantVelocity,
    DiscreteBath,
    DivergenceError,
    DomainError,
    FreePotential,
    HarmonicPotential,
    ParticleInit,
    ParticleSpec,
    TabulatedForce,
    integrate_full,
    realization_stream,
    sample_thermal,
)
from oscbath.microdynamics import bath_force
from oscbath.spectral import CouplingMode, empty_bath


def test_free_particle_without_bath():
    traj = integrate_full(ParticleSpec(1.0), empty_bath(), BathState([], []),
                          ParticleInit(0.0, 1.0), dt=1e-3, n_steps=1000)
    assert traj.x[-1] == pytest.approx(1.0, abs=1e-9)


def test_pinned_particle_oscillator():
    bath = DiscreteBath([2.0], [1.0])
    n = 3000
    traj = integrate_full(ParticleSpec(1e9), bath, BathState([1.0], [0.0]), ParticleInit(0.0, 0.0),
                          dt=np.pi / n, n_steps=n, record_bath=True)
    q = traj.bath_q[:, 0]
    np.testing.assert_allclose(q, np.cos(2 * traj.t), atol=1e-5)
    assert q[-1] == pytest.approx(1.0, abs=1e-6)


def test_harmonic_trap_period():
    traj = integrate_full(ParticleSpec(1.0, HarmonicPotential(1.0)), empty_bath(), BathState([], []),
                          ParticleInit(1.0, 0.0), dt=2 * np.pi / 6000, n_steps=6000)
    assert traj.x[-1] == pytest.approx(1.0, abs=1e-5)


class TestForceLaws:
    def test_perturbative_vs_invariant_initial_force(self, wn_bath64):
        x0 = 1.0
        q = np.full((1, wn_bath64.n_osc), x0)
        u0 = wn_bath64.stiffness.sum()
        pert = bath_force(wn_bath64.with_mode(CouplingMode.PERTURBATIVE), np.array([x0]), q)
        inv = bath_force(wn_bath64, np.array([x0]), q)
        assert pert[0] == pytest.approx(u0 * x0, rel=1e-14)
        assert inv[0] == 0.0

    def test_perturbative_trajectory_accelerates(self, wn_bath64):
        bath = wn_bath64.with_mode("perturbative")
        state = sample_thermal(bath, 0.0, 1.0)
        dt = 1e-3
        traj = integrate_full(ParticleSpec(1.0), bath, state, ParticleInit(1.0, 0.0), dt=dt, n_steps=1)
        u0 = bath.stiffness.sum()
        assert traj.x[1] - 1.0 == pytest.approx(0.5 * u0 * dt**2, rel=1e-12)
        inv = integrate_full(ParticleSpec(1.0), wn_bath64, state, ParticleInit(1.0, 0.0), dt=dt, n_steps=100)
        assert np.all(inv.x == 1.0)


class TestInvariants:
    def test_energy_drift_second_order(self, wn_bath64):
        state = sample_thermal(wn_bath64, 1.0, 0.0, 0.0, 0.0, realization_stream(5))
        particle = ParticleSpec(1.0, HarmonicPotential(0.5))
        drifts = []
        for dt in (2e-3, 1e-3):
            traj = integrate_full(particle, wn_bath64, state, ParticleInit(0.0, 0.5), dt=dt,
                                  n_steps=int(round(5 / dt)), record_energy=True)
            drifts.append(np.max(np.abs(traj.energy - traj.energy[0])))
        assert drifts[0] / drifts[1] == pytest.approx(4.0, rel=0.25)
        assert drifts[1] < 1e-3 * abs(traj.energy[0])

    def test_translation_invariance(self, wn_bath64):
        state = sample_thermal(wn_bath64, 1.0, 0.0, 0.0, 0.0, realization_stream(6))
        a = 3.25
        shifted = BathState(state.positions + a, state.velocities)
        t1 = integrate_full(ParticleSpec(1.0), wn_bath64, state, ParticleInit(0.0, 0.2), dt=1e-3, n_steps=3000)
        t2 = integrate_full(ParticleSpec(1.0), wn_bath64, shifted, ParticleInit(a, 0.2), dt=1e-3, n_steps=3000)
        np.testing.assert_allclose(t2.x - a, t1.x, atol=1e-11)
        np.testing.assert_allclose(t2.v, t1.v, atol=1e-11)

    def test_galilean_consistency(self, wn_bath64):
        v = 0.8
        state = sample_thermal(wn_bath64, 1.0, 0.0, 0.0, 0.0, realization_stream(7))
        boosted = BathState(state.positions, state.velocities + v)
        dt, n = 1e-3, 3000
        rest = integrate_full(ParticleSpec(1.0), wn_bath64, state, ParticleInit(0.0, 0.1), dt=dt, n_steps=n)
        moving = integrate_full(ParticleSpec(1.0), wn_bath64, boosted, ParticleInit(0.0, 0.1 + v),
                                ConstantVelocity(v), dt=dt, n_steps=n)
        np.testing.assert_allclose(moving.x, rest.x + v * rest.t, atol=1e-9)

    def test_zero_dissipation_line(self, wn_bath64):
        v = 1.3
        state = sample_thermal(wn_bath64, 0.0, 0.4, v)
        traj = integrate_full(ParticleSpec(1.0), wn_bath64, state, ParticleInit(0.4, v),
                              ConstantVelocity(v), dt=1e-3, n_steps=5000)
        np.testing.assert_allclose(traj.x, 0.4 + v * traj.t, rtol=0, atol=1e-11)


class TestErrors:
    def test_stability_guard(self, wn_bath64):
        with pytest.raises(ConfigurationError):
            integrate_full(ParticleSpec(1.0), wn_bath64, sample_thermal(wn_bath64, 0.0, 0.0),
                           ParticleInit(0, 0), dt=0.03, n_steps=10)

    def test_state_length_mismatch(self, wn_bath64):
        with pytest.raises(ConfigurationError):
            integrate_full(ParticleSpec(1.0), wn_bath64, BathState([0.0], [0.0]), ParticleInit(0, 0))

    def test_divergence_reports_step(self):
        with pytest.raises(DivergenceError) as err:
            integrate_full(ParticleSpec(1.0, FreePotential()), empty_bath(), BathState([], []),
                           ParticleInit(0.0, 1e308), dt=10.0, n_steps=5)
        assert err.value.step == 1


class TestTabulatedForce:
    def test_matches_harmonic(self):
        x = np.linspace(-3, 3, 601)
        tab = TabulatedForce(x, -x)
        ref = HarmonicPotential(1.0)
        pts = np.array([-1.234, 0.5, 2.0])
        np.testing.assert_allclose(tab.force(pts, 0.0, 1.0), ref.force(pts, 0.0, 1.0), atol=1e-12)
        # energy relative to the left end of the table
        e = tab.energy(pts, 0.0, 1.0) - tab.energy(np.array([0.0]), 0.0, 1.0)
        np.testing.assert_allclose(e, ref.energy(pts, 0.0, 1.0), atol=1e-4)

    def test_time_dependent(self):
        tab = TabulatedForce([0.0, 1.0], [[0.0, 0.0], [2.0, 2.0]], t_grid=[0.0, 1.0])
        assert tab.force(np.array([0.5]), 0.25, 1.0)[0] == pytest.approx(0.5)

    def test_out_of_domain(self):
        with pytest.raises(DomainError):
            TabulatedForce([0.0, 1.0], [0.0, 0.0]).force(np.array([2.0]), 0.0, 1.0)
