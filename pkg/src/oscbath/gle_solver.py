"""Generalized Langevin dynamics.

Three pieces live here: reconstruction of the bath noise force from a
sampled bath configuration, integration of the memory equation

    M x'' = f(x, t) - int_{t0}^t u(t - s) [x'(s) - v_env(s)] ds + R(t),

and the white-noise Langevin limit with drag ``-eta (x' - v_env)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._grid import frozen, same_grid, time_grid, uniform_step
from .errors import ConfigurationError, DivergenceError, ParameterError
from .microdynamics import Trajectory
from .thermal_sampling import STATIC


@dataclass(frozen=True)
class NoiseRecord:
    t: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        t = frozen(self.t)
        r = frozen(self.R)
        if t.shape != r.shape:
            raise ConfigurationError("noise record grid and values differ in length")
        if not np.all(np.isfinite(r)):
            raise ConfigurationError("noise record must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "R", r)


def noise_force_batch(bath, q0, qdot0, x0, v_env0, t_rel):
    """``R`` for a stack of bath samples; ``q0``/``qdot0`` are ``(B, N)``,
    ``x0`` is ``(B,)`` or scalar, ``t_rel`` are times since sampling."""
    w = bath.frequencies
    k = bath.stiffness
    q0 = np.atleast_2d(q0)
    qdot0 = np.atleast_2d(qdot0)
    x0 = np.reshape(np.asarray(x0, dtype=float), (-1, 1))
    phase = np.outer(w, np.asarray(t_rel, dtype=float))
    return (k * (q0 - x0)) @ np.cos(phase) + (k * (qdot0 - v_env0) / w) @ np.sin(phase)


def noise_force(bath, bath_state, x0, profile=STATIC, t_grid=None):
    """Noise force generated by the bath sampled at ``bath_state.sampled_at``."""
    t = np.asarray(t_grid, dtype=float)
    t0 = bath_state.sampled_at
    if t.size == 0 or abs(t[0] - t0) > 1e-12 * max(1.0, abs(t0)):
        raise ConfigurationError("noise grid must start at the bath sampling time")
    if len(bath_state) != bath.n_osc:
        raise ConfigurationError("bath_state length does not match the bath")
    v0 = float(profile.velocity(t0))
    R = noise_force_batch(bath, bath_state.positions, bath_state.velocities, x0, v0, t - t0)[0]
    return NoiseRecord(t, R)


@np.errstate(over="ignore", invalid="ignore")
def integrate_gle_batch(particle, u, R, x0, v0, profile=STATIC, t0=0.0, dt=1e-3, n_steps=1000,
                        first_index=0):
    """Integrate ``B`` GLE trajectories sharing a memory kernel.

    ``u`` holds the kernel on lags ``0, dt, 2 dt, ...``; ``R`` has shape
    ``(B, n_steps + 1)``.  Velocity-Verlet stepping with a trapezoidal
    memory integral; the end-point term of the integral involves the new
    velocity and is solved for exactly (it is linear).
    """
    n_steps = int(n_steps)
    u = np.asarray(u, dtype=float)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    x = np.array(x0, dtype=float, ndmin=1)
    v = np.array(v0, dtype=float, ndmin=1)
    B = x.size
    if u.size < n_steps + 1:
        raise ConfigurationError("kernel grid is shorter than the integration horizon")
    if R.shape != (B, n_steps + 1):
        raise ConfigurationError("noise grid does not match the integration grid")

    t = time_grid(t0, dt, n_steps)
    venv = np.asarray(profile.velocity(t), dtype=float) * np.ones(n_steps + 1)
    M = particle.mass
    c = 0.5 * dt * u[0]
    denom = 1.0 + 0.5 * dt * c / M
    u_rev = u[n_steps:0:-1].copy()  # u[n], u[n-1], ..., u[1]

    xs = np.empty((B, n_steps + 1))
    vs = np.empty((B, n_steps + 1))
    g = np.empty((B, n_steps + 1))  # x' - v_env, as computed
    xs[:, 0], vs[:, 0] = x, v
    g[:, 0] = v - venv[0]
    a = (particle.force(x, t[0]) + R[:, 0]) / M

    for n in range(n_steps):
        k = n + 1
        x = x + dt * v + 0.5 * dt * dt * a
        # lags k..1 against g_0..g_{k-1}
        lags = u_rev[n_steps - k:]
        memory = dt * (g[:, :k] @ lags) - 0.5 * dt * u[k] * g[:, 0]
        rhs = particle.force(x, t[k]) + R[:, k] - memory + c * venv[k]
        v = (v + 0.5 * dt * a + 0.5 * dt * rhs / M) / denom
        a = (rhs - c * v) / M
        if not (np.isfinite(x).all() and np.isfinite(v).all()):
            bad = int(np.flatnonzero(~(np.isfinite(x) & np.isfinite(v)))[0])
            raise DivergenceError(k, first_index + bad)
        xs[:, k], vs[:, k] = x, v
        g[:, k] = v - venv[k]
    return {"t": t, "x": xs, "v": vs}


def _check_against(grid, dt, name):
    h = uniform_step(grid, name)
    if abs(h - dt) > 1e-9 * dt:
        raise ConfigurationError(f"{name} spacing {h} does not match dt={dt}")


def integrate_gle(particle, kernel_u, noise, init, profile=STATIC, dt=1e-3, n_steps=1000):
    """Integrate the GLE with a tabulated kernel and a precomputed noise force."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    _check_against(kernel_u.tau_grid, dt, "kernel grid")
    t0 = float(noise.t[0])
    if not same_grid(noise.t, time_grid(t0, dt, n_steps), rtol=1e-9):
        raise ConfigurationError("noise grid does not match the integration grid")
    try:
        res = integrate_gle_batch(particle, kernel_u.values, noise.R[None, :], [init.x0], [init.v0],
                                  profile, t0, dt, n_steps)
    except DivergenceError as err:
        raise DivergenceError(err.step) from None
    return Trajectory(res["t"], res["x"][0], res["v"][0])


def _ou_coefficients(gamma, dt):
    decay = np.exp(-gamma * dt)
    # (1 - e^{-gamma dt}) / gamma, with the gamma -> 0 limit
    lag = -np.expm1(-gamma * dt) / gamma if gamma > 0 else dt
    return decay, lag


@np.errstate(over="ignore", invalid="ignore")
def integrate_langevin_batch(particle, eta, temperature, x0, v0, profile, t0, dt, n_steps, noise,
                             first_index=0):
    """BAOAB splitting; the velocity relaxes toward ``v_env`` through an exact
    Ornstein-Uhlenbeck step.  ``noise`` holds standard normals ``(B, n_steps)``.
    """
    n_steps = int(n_steps)
    x = np.array(x0, dtype=float, ndmin=1)
    v = np.array(v0, dtype=float, ndmin=1)
    B = x.size
    noise = np.atleast_2d(noise)
    if noise.shape != (B, n_steps):
        raise ConfigurationError("noise array must have shape (B, n_steps)")
    M = particle.mass
    gamma = eta / M
    decay, lag = _ou_coefficients(gamma, dt)
    sigma = np.sqrt(temperature / M * -np.expm1(-2.0 * gamma * dt))
    # drift gained while relaxing toward a locally linear v_env
    ramp_gain = 0.5 * dt * (1.0 + decay) - lag

    t = time_grid(t0, dt, n_steps)
    t_mid = t[:-1] + 0.5 * dt
    venv_mid = np.asarray(profile.velocity(t_mid), dtype=float) * np.ones(n_steps)
    aenv_mid = np.asarray(profile.acceleration(t_mid), dtype=float) * np.ones(n_steps)
    half = 0.5 * dt

    xs = np.empty((B, n_steps + 1))
    vs = np.empty((B, n_steps + 1))
    xs[:, 0], vs[:, 0] = x, v
    f = particle.force(x, t[0])
    for n in range(n_steps):
        v = v + half * f / M
        x = x + half * v
        v = (decay * v + (1.0 - decay) * venv_mid[n] + ramp_gain * aenv_mid[n]
             + sigma * noise[:, n])
        x = x + half * v
        f = particle.force(x, t[n + 1])
        v = v + half * f / M
        if not (np.isfinite(x).all() and np.isfinite(v).all()):
            bad = int(np.flatnonzero(~(np.isfinite(x) & np.isfinite(v)))[0])
            raise DivergenceError(n + 1, first_index + bad)
        xs[:, n + 1], vs[:, n + 1] = x, v
    return {"t": t, "x": xs, "v": vs}


def check_langevin_params(eta, temperature, dt):
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if eta < 0:
        raise ParameterError("eta must be >= 0")
    if temperature < 0:
        raise ParameterError("temperature must be >= 0")


def integrate_langevin_white(particle, eta, temperature, init, profile=STATIC, dt=1e-3,
                             n_steps=1000, rng=None, t0=0.0):
    """Langevin equation with instantaneous drag and white noise of
    intensity ``2 eta k_B T``."""
    check_langevin_params(eta, temperature, dt)
    n_steps = int(n_steps)
    if temperature > 0 and eta > 0:
        if rng is None:
            raise ParameterError("a random stream is required at nonzero temperature")
        noise = rng.standard_normal(n_steps)
    else:
        noise = np.zeros(n_steps)
    try:
        res = integrate_langevin_batch(particle, eta, temperature, [init.x0], [init.v0], profile,
                                       t0, dt, n_steps, noise[None, :])
    except DivergenceError as err:
        raise DivergenceError(err.step) from None
    return Trajectory(res["t"], res["x"][0], res["v"][0])
