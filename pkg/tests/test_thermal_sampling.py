import numpy as np
import pytest
from scipy import stats

from oscbath import (
    ConstantVelocity,
    DiscreteBath,
    DomainError,
    ParameterError,
    RampVelocity,
    SinusoidVelocity,
    TabulatedVelocity,
    realization_stream,
    sample_particle,
    sample_thermal,
    velocity_at,
)
from oscbath.thermal_sampling import sample_thermal_batch


def _many(bath, kT, x0, v, M, seed=0):
    rngs = [realization_stream(seed, i) for i in range(M)]
    return sample_thermal_batch(bath, kT, x0, v, rngs)


class TestSampleThermal:
    def test_position_moments(self):
        bath = DiscreteBath([2.0], [1.0])
        q, _ = _many(bath, 1.0, 0.5, 0.0, 100_000)
        assert q.mean() == pytest.approx(0.5, abs=0.005)
        assert q.var(ddof=1) == pytest.approx(0.25, rel=0.02)

    def test_velocity_centred_on_environment(self):
        bath = DiscreteBath([2.0], [1.0])
        M = 100_000
        _, qd = _many(bath, 1.0, 0.0, 2.0, M)
        assert abs(qd.mean() - 2.0) <= 3 * 1.0 / np.sqrt(M)
        assert qd.var(ddof=1) == pytest.approx(1.0, rel=0.02)

    def test_zero_temperature_is_exact(self, wn_bath64):
        s = sample_thermal(wn_bath64, 0.0, 0.7, 1.5, 2.0)
        assert np.all(s.positions == 0.7)
        assert np.all(s.velocities == 1.5)
        assert s.sampled_at == 2.0

    def test_negative_temperature(self, wn_bath64):
        with pytest.raises(ParameterError):
            sample_thermal(wn_bath64, -1.0, 0.0, 0.0, 0.0, realization_stream(0))

    def test_independence_between_oscillators(self):
        bath = DiscreteBath([1.0, 3.0], [1.0, 0.5])
        M = 20_000
        q, qd = _many(bath, 1.0, 0.0, 0.0, M)
        for a, b in [(q[:, 0], q[:, 1]), (q[:, 0], qd[:, 0]), (qd[:, 0], qd[:, 1])]:
            r = np.corrcoef(a, b)[0, 1]
            assert abs(r) <= 3 / np.sqrt(M)

    def test_translation_covariance(self):
        bath = DiscreteBath([1.5], [2.0])
        q0, _ = _many(bath, 1.0, 0.0, 0.0, 10_000, seed=1)
        qa, _ = _many(bath, 1.0, 3.0, 0.0, 10_000, seed=2)
        assert stats.ks_2samp(q0[:, 0] + 3.0, qa[:, 0]).pvalue > 0.01

    def test_equipartition(self, wn_bath64):
        q, qd = _many(wn_bath64, 2.0, 1.0, 0.0, 5000)
        pot = 0.5 * wn_bath64.stiffness * (q - 1.0) ** 2
        kin = 0.5 * wn_bath64.masses * qd**2
        # each mean over 5000 * 64 chi^2_1 / 2 terms: relative se sqrt(2 / 320000)
        assert pot.mean() == pytest.approx(1.0, rel=4 * np.sqrt(2 / pot.size))
        assert kin.mean() == pytest.approx(1.0, rel=4 * np.sqrt(2 / kin.size))

    def test_seeded_determinism(self, wn_bath64):
        a = sample_thermal(wn_bath64, 1.0, 0.0, 0.0, 0.0, realization_stream(42, 3))
        b = sample_thermal(wn_bath64, 1.0, 0.0, 0.0, 0.0, realization_stream(42, 3))
        c = sample_thermal(wn_bath64, 1.0, 0.0, 0.0, 0.0, realization_stream(42, 4))
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.velocities, b.velocities)
        assert not np.array_equal(a.positions, c.positions)

    def test_batch_matches_single(self, wn_bath64):
        q, qd = _many(wn_bath64, 1.0, 0.2, 0.5, 3, seed=9)
        s = sample_thermal(wn_bath64, 1.0, 0.2, 0.5, 0.0, realization_stream(9, 2))
        assert np.array_equal(q[2], s.positions)
        assert np.array_equal(qd[2], s.velocities)


class TestVelocityProfiles:
    def test_constant(self):
        assert velocity_at(ConstantVelocity(1.0), 7.0) == (1.0, 0.0)

    def test_ramp(self):
        assert velocity_at(RampVelocity(0.0, 2.0), 3.0) == (6.0, 2.0)

    def test_sinusoid(self):
        v, a = velocity_at(SinusoidVelocity(1.0, 2.0, 0.0), 0.0)
        assert v == 0.0 and a == 2.0

    def test_tabulated_consistency(self):
        t = np.linspace(0, 2, 201)
        prof = TabulatedVelocity(t, np.sin(t))
        tt = np.linspace(0.1, 1.9, 17)
        v, a = velocity_at(prof, tt)
        np.testing.assert_allclose(v, np.sin(tt), atol=1e-4)
        np.testing.assert_allclose(a, np.cos(tt), atol=1e-3)
        np.testing.assert_allclose(prof.displacement(0.0, tt), 1 - np.cos(tt), atol=1e-4)

    def test_tabulated_domain(self):
        prof = TabulatedVelocity([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(DomainError):
            velocity_at(prof, 1.5)

    @pytest.mark.parametrize("prof", [RampVelocity(0.3, -0.7), SinusoidVelocity(1.2, 0.8, 0.4)])
    def test_displacement_integrates_velocity(self, prof):
        from scipy.integrate import quad
        exact = quad(lambda s: float(prof.velocity(s)), 0.5, 3.0)[0]
        assert prof.displacement(0.5, 3.0) == pytest.approx(exact, rel=1e-10)


class TestParticleInit:
    def test_sharp_by_default(self):
        p = sample_particle(1.0, 2.0)
        assert (p.x0, p.v0) == (1.0, 2.0)

    def test_spread(self):
        xs = np.array([sample_particle(0.0, 0.0, 0.5, 0.0, realization_stream(0, i)).x0
                       for i in range(4000)])
        assert xs.std(ddof=1) == pytest.approx(0.5, rel=0.05)
