"""Explicit integration of the particle coupled to every bath oscillator.

Equations of motion (invariant coupling)::

    M x''   = f(x, t) + sum_n m_n w_n^2 (q_n - x)
    q_n''   = -w_n^2 (q_n - x) + dv_env/dt

In perturbative coupling the particle only feels ``sum_n m_n w_n^2 q_n``
(no counter-term); the oscillator equation is the same.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._grid import frozen, time_grid
from .errors import ConfigurationError, DivergenceError, DomainError, ParameterError
from .spectral import CouplingMode
from .thermal_sampling import STATIC

STABILITY_LIMIT = 0.5


# --- potentials --------------------------------------------------------------

@dataclass(frozen=True)
class FreePotential:
    def force(self, x, t, mass):
        return np.zeros_like(x)

    def energy(self, x, t, mass):
        return np.zeros_like(x)


@dataclass(frozen=True)
class HarmonicPotential:
    """``V = M omega0^2 x^2 / 2`` with ``omega0`` the trap angular frequency."""

    omega0: float

    def __post_init__(self):
        if not (np.isfinite(self.omega0) and self.omega0 >= 0):
            raise ParameterError("trap frequency must be finite and >= 0")

    def force(self, x, t, mass):
        return -mass * self.omega0**2 * x

    def energy(self, x, t, mass):
        return 0.5 * mass * self.omega0**2 * x * x


@dataclass(frozen=True)
class TabulatedForce:
    """Force ``f(x)`` or ``f(x, t)`` linearly interpolated from a table.

    ``f_values`` is 1-D over ``x_grid``, or 2-D with shape
    ``(len(t_grid), len(x_grid))`` for a time-dependent force.
    """

    x_grid: np.ndarray
    f_values: np.ndarray
    t_grid: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float)
        f = np.asarray(self.f_values, dtype=float)
        if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
            raise ParameterError("x_grid must be strictly ascending with >= 2 points")
        if not np.all(np.isfinite(f)):
            raise ParameterError("tabulated force must be finite")
        if self.t_grid is None:
            if f.shape != x.shape:
                raise ParameterError("f_values must match x_grid")
        else:
            t = np.asarray(self.t_grid, dtype=float)
            if t.ndim != 1 or np.any(np.diff(t) <= 0) or f.shape != (t.size, x.size):
                raise ParameterError("time-dependent f_values must have shape (len(t_grid), len(x_grid))")
            object.__setattr__(self, "t_grid", frozen(t))
        object.__setattr__(self, "x_grid", frozen(x))
        object.__setattr__(self, "f_values", frozen(f))

    def _row(self, t):
        if self.t_grid is None:
            return self.f_values
        if t < self.t_grid[0] or t > self.t_grid[-1]:
            raise DomainError(f"t={t} outside tabulated force time range")
        j = int(np.clip(np.searchsorted(self.t_grid, t, side="right") - 1, 0, self.t_grid.size - 2))
        w = (t - self.t_grid[j]) / (self.t_grid[j + 1] - self.t_grid[j])
        return (1 - w) * self.f_values[j] + w * self.f_values[j + 1]

    def _check(self, x):
        if np.any(x < self.x_grid[0]) or np.any(x > self.x_grid[-1]):
            raise DomainError("particle left the tabulated force domain")

    def force(self, x, t, mass):
        self._check(x)
        return np.interp(x, self.x_grid, self._row(t))

    def energy(self, x, t, mass):
        self._check(x)
        f = self._row(t)
        # V(x) = -int_{x_grid[0]}^x f, exact for the piecewise-linear force
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(self.x_grid))])
        i = np.clip(np.searchsorted(self.x_grid, x, side="right") - 1, 0, self.x_grid.size - 2)
        h = x - self.x_grid[i]
        slope = (f[i + 1] - f[i]) / (self.x_grid[i + 1] - self.x_grid[i])
        return -(cum[i] + f[i] * h + 0.5 * slope * h * h)


Potential = FreePotential | HarmonicPotential | TabulatedForce


@dataclass(frozen=True)
class ParticleSpec:
    mass: float
    potential: Potential = FreePotential()

    def __post_init__(self):
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ParameterError("particle mass must be positive")

    def force(self, x, t):
        return self.potential.force(x, t, self.mass)

    def potential_energy(self, x, t):
        return self.potential.energy(x, t, self.mass)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    energy: Optional[np.ndarray] = None
    bath_q: Optional[np.ndarray] = None
    bath_v: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.t)
        if len(self.x) != n or len(self.v) != n:
            raise ConfigurationError("trajectory arrays differ in length")

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0


# --- integrator ----------------------------------------------------------------

def bath_force(bath, x, q):
    """Force exerted by the oscillators on the particle.

    ``x`` has shape ``(B,)`` and ``q`` shape ``(B, N)``.
    """
    k = bath.stiffness
    if bath.coupling_mode is CouplingMode.PERTURBATIVE:
        return q @ k
    return (q - x[:, None]) @ k


def bath_energy(bath, x, q, qdot_rel):
    k = bath.stiffness
    kinetic = 0.5 * (qdot_rel * qdot_rel) @ bath.masses
    if bath.coupling_mode is CouplingMode.PERTURBATIVE:
        return kinetic + 0.5 * (q * q) @ k - x * (q @ k)
    d = q - x[:, None]
    return kinetic + 0.5 * (d * d) @ k


def check_stability(bath, dt):
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if dt * bath.max_frequency >= STABILITY_LIMIT:
        raise ConfigurationError(
            f"dt * max(omega) = {dt * bath.max_frequency:.3g} violates the stability guard "
            f"(< {STABILITY_LIMIT})"
        )


@np.errstate(over="ignore", invalid="ignore")
def integrate_full_batch(particle, bath, q0, qdot0, x0, v0, profile=STATIC, t0=0.0,
                         dt=1e-3, n_steps=1000, record_energy=False, record_bath=False,
                         first_index=0):
    """Velocity-Verlet integration of ``B`` independent systems at once.

    ``q0``, ``qdot0`` have shape ``(B, N)``; ``x0``, ``v0`` shape ``(B,)``.
    Returns a dict of arrays with leading shape ``(B, n_steps + 1)``.
    """
    check_stability(bath, dt)
    n_steps = int(n_steps)
    q = np.array(q0, dtype=float, ndmin=2)
    qd = np.array(qdot0, dtype=float, ndmin=2)
    x = np.array(x0, dtype=float, ndmin=1)
    v = np.array(v0, dtype=float, ndmin=1)
    B, N = q.shape
    if N != bath.n_osc or qd.shape != q.shape or x.shape != (B,) or v.shape != (B,):
        raise ConfigurationError("bath state does not match bath size / batch shape")

    t = time_grid(t0, dt, n_steps)
    venv_dot = np.asarray(profile.acceleration(t), dtype=float)
    w2 = bath.frequencies**2
    M = particle.mass
    half = 0.5 * dt

    xs = np.empty((B, n_steps + 1))
    vs = np.empty((B, n_steps + 1))
    xs[:, 0], vs[:, 0] = x, v
    energy = np.empty((B, n_steps + 1)) if record_energy else None
    qs = np.empty((B, n_steps + 1, N)) if record_bath else None
    qds = np.empty((B, n_steps + 1, N)) if record_bath else None

    def accelerations(x, q, k):
        ax = (particle.force(x, t[k]) + bath_force(bath, x, q)) / M
        aq = -w2 * (q - x[:, None]) + venv_dot[k]
        return ax, aq

    def snapshot(k):
        if record_energy:
            rel = qd - np.asarray(profile.velocity(t[k]), dtype=float)
            energy[:, k] = (0.5 * M * v * v + particle.potential_energy(x, t[k])
                            + bath_energy(bath, x, q, rel))
        if record_bath:
            qs[:, k] = q
            qds[:, k] = qd

    ax, aq = accelerations(x, q, 0)
    snapshot(0)
    for k in range(1, n_steps + 1):
        v = v + half * ax
        qd = qd + half * aq
        x = x + dt * v
        q = q + dt * qd
        ax, aq = accelerations(x, q, k)
        v = v + half * ax
        qd = qd + half * aq
        if not (np.isfinite(x).all() and np.isfinite(v).all()):
            bad = int(np.flatnonzero(~(np.isfinite(x) & np.isfinite(v)))[0])
            raise DivergenceError(k, first_index + bad)
        xs[:, k], vs[:, k] = x, v
        snapshot(k)

    out = {"t": t, "x": xs, "v": vs}
    if record_energy:
        out["energy"] = energy
    if record_bath:
        out["bath_q"], out["bath_v"] = qs, qds
    return out


def integrate_full(particle, bath, bath_state, init, profile=STATIC, dt=1e-3, n_steps=1000,
                   record_energy=False, record_bath=False):
    """Integrate the particle and all oscillators from ``bath_state.sampled_at``."""
    if len(bath_state) != bath.n_osc:
        raise ConfigurationError("bath_state length does not match the bath")
    try:
        res = integrate_full_batch(
            particle, bath, bath_state.positions[None, :], bath_state.velocities[None, :],
            [init.x0], [init.v0], profile, bath_state.sampled_at, dt, n_steps,
            record_energy, record_bath,
        )
    except DivergenceError as err:
        raise DivergenceError(err.step) from None
    return Trajectory(
        t=res["t"], x=res["x"][0], v=res["v"][0],
        energy=res["energy"][0] if record_energy else None,
        bath_q=res["bath_q"][0] if record_bath else None,
        bath_v=res["bath_v"][0] if record_bath else None,
    )
