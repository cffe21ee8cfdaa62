"""Thermal initial conditions for the bath and environment velocity profiles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._grid import frozen
from .errors import DomainError, ParameterError


# --- random streams -------------------------------------------------------

def realization_stream(base_seed, index=0):
    """Counter-based generator owning the substream of one realization.

    The stream depends only on ``(base_seed, index)``, so an ensemble gives
    the same realizations whatever order or worker they are computed on.
    """
    seq = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seq))


# --- environment velocity ---------------------------------------------------

@dataclass(frozen=True)
class ConstantVelocity:
    v: float = 0.0

    def velocity(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.v)

    def acceleration(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def displacement(self, t0, t):
        return self.v * (np.asarray(t, dtype=float) - t0)


@dataclass(frozen=True)
class RampVelocity:
    v0: float
    accel: float

    def velocity(self, t):
        return self.v0 + self.accel * np.asarray(t, dtype=float)

    def acceleration(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.accel)

    def displacement(self, t0, t):
        t = np.asarray(t, dtype=float)
        return self.v0 * (t - t0) + 0.5 * self.accel * (t**2 - t0**2)


@dataclass(frozen=True)
class SinusoidVelocity:
    amplitude: float
    angular_frequency: float
    phase: float = 0.0

    def velocity(self, t):
        return self.amplitude * np.sin(self.angular_frequency * np.asarray(t, dtype=float) + self.phase)

    def acceleration(self, t):
        w = self.angular_frequency
        return self.amplitude * w * np.cos(w * np.asarray(t, dtype=float) + self.phase)

    def displacement(self, t0, t):
        w = self.angular_frequency
        t = np.asarray(t, dtype=float)
        if w == 0:
            return self.amplitude * np.sin(self.phase) * (t - t0)
        return self.amplitude / w * (np.cos(w * t0 + self.phase) - np.cos(w * t + self.phase))


@dataclass(frozen=True)
class TabulatedVelocity:
    """Piecewise-linear ``v(t)``; the derivative is a finite difference on the
    table (centered inside, one-sided at the ends), linearly interpolated."""

    t_grid: np.ndarray
    v_values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        v = np.asarray(self.v_values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ParameterError("tabulated profile needs matching 1-D arrays with >= 2 points")
        if np.any(np.diff(t) <= 0):
            raise ParameterError("tabulated profile time grid must be strictly ascending")
        if not np.all(np.isfinite(v)):
            raise ParameterError("tabulated profile velocities must be finite")
        object.__setattr__(self, "t_grid", frozen(t))
        object.__setattr__(self, "v_values", frozen(v))
        object.__setattr__(self, "_vdot", frozen(np.gradient(v, t, edge_order=1)))
        seg = 0.5 * (v[1:] + v[:-1]) * np.diff(t)
        object.__setattr__(self, "_cumulative", frozen(np.concatenate([[0.0], np.cumsum(seg)])))

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        span = self.t_grid[-1] - self.t_grid[0]
        eps = 1e-12 * max(span, 1.0)
        if np.any(t < self.t_grid[0] - eps) or np.any(t > self.t_grid[-1] + eps):
            raise DomainError(
                f"time outside tabulated profile domain [{self.t_grid[0]}, {self.t_grid[-1]}]"
            )
        return np.clip(t, self.t_grid[0], self.t_grid[-1])

    def velocity(self, t):
        return np.interp(self._check(t), self.t_grid, self.v_values)

    def acceleration(self, t):
        return np.interp(self._check(t), self.t_grid, self._vdot)

    def _primitive(self, t):
        t = self._check(t)
        i = np.clip(np.searchsorted(self.t_grid, t, side="right") - 1, 0, self.t_grid.size - 2)
        h = t - self.t_grid[i]
        slope = (self.v_values[i + 1] - self.v_values[i]) / (self.t_grid[i + 1] - self.t_grid[i])
        return self._cumulative[i] + self.v_values[i] * h + 0.5 * slope * h**2

    def displacement(self, t0, t):
        return self._primitive(t) - self._primitive(t0)


VelocityProfile = ConstantVelocity | RampVelocity | SinusoidVelocity | TabulatedVelocity

STATIC = ConstantVelocity(0.0)


def velocity_at(profile, t):
    """Return ``(v_env(t), dv_env/dt(t))``."""
    v = profile.velocity(t)
    a = profile.acceleration(t)
    if np.ndim(v) == 0:
        return float(v), float(a)
    return v, a


# --- particle and bath states ---------------------------------------------

@dataclass(frozen=True)
class ParticleInit:
    x0: float
    v0: float

    def __post_init__(self):
        if not (np.isfinite(self.x0) and np.isfinite(self.v0)):
            raise ParameterError("particle initial conditions must be finite")


def sample_particle(x0, v0, x_width=0.0, v_width=0.0, rng=None):
    """Sharp initial state by default; Gaussian spread when widths are given."""
    if x_width < 0 or v_width < 0:
        raise ParameterError("initial-condition widths must be nonnegative")
    if x_width == 0 and v_width == 0:
        return ParticleInit(float(x0), float(v0))
    if rng is None:
        raise ParameterError("a random stream is required for spread initial conditions")
    z = rng.standard_normal(2)
    return ParticleInit(float(x0 + x_width * z[0]), float(v0 + v_width * z[1]))


@dataclass(frozen=True)
class BathState:
    positions: np.ndarray
    velocities: np.ndarray
    sampled_at: float = 0.0

    def __post_init__(self):
        q = frozen(np.atleast_1d(self.positions))
        qd = frozen(np.atleast_1d(self.velocities))
        if q.shape != qd.shape or q.ndim != 1:
            raise ParameterError("bath positions and velocities must be equal-length 1-D arrays")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise ParameterError("bath state must be finite")
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "velocities", qd)

    def __len__(self):
        return self.positions.size


def thermal_widths(bath, temperature):
    if temperature < 0 or not np.isfinite(temperature):
        raise ParameterError(f"temperature must be >= 0, got {temperature}")
    return np.sqrt(temperature / bath.stiffness), np.sqrt(temperature / bath.masses)


def sample_thermal(bath, temperature, x0, v_env_at_t0=0.0, t0=0.0, rng=None):
    """Draw one bath configuration from the canonical distribution centred on
    the particle position ``x0`` and the environment velocity at ``t0``.

    Positions have variance ``k_B T / (m_n omega_n^2)``, velocities
    ``k_B T / m_n``; all draws are independent.
    """
    sq, sv = thermal_widths(bath, temperature)
    n = bath.n_osc
    if temperature == 0:
        return BathState(np.full(n, float(x0)), np.full(n, float(v_env_at_t0)), float(t0))
    if rng is None:
        raise ParameterError("a random stream is required at nonzero temperature")
    z = rng.standard_normal((2, n))
    return BathState(x0 + sq * z[0], v_env_at_t0 + sv * z[1], float(t0))


def sample_thermal_batch(bath, temperature, x0, v_env_at_t0, rngs):
    """Stack of independent samples, one per stream; shape ``(len(rngs), N)``."""
    sq, sv = thermal_widths(bath, temperature)
    n = bath.n_osc
    q = np.full((len(rngs), n), float(x0))
    qd = np.full((len(rngs), n), float(v_env_at_t0))
    if temperature > 0:
        for i, rng in enumerate(rngs):
            z = rng.standard_normal((2, n))
            q[i] += sq * z[0]
            qd[i] += sv * z[1]
    return q, qd
