"""Thermal oscillator density matrices and the discretized influence phase.

Paths are given in mean/difference coordinates ``X = (x + x')/2`` and
``xi = x' - x``.  The influence phase

    dS = int_{ta}^{tb} dt int_{ta}^{t} ds xi(t) { u(t-s) [X'(s) - v_env(s)]
                                                  + i alpha(t-s) xi(s) }

has units of action; the influence functional is ``F = exp(i dS / hbar)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._grid import frozen, uniform_step
from .errors import ConfigurationError, ParameterError
from .thermal_sampling import STATIC


@dataclass(frozen=True)
class PathPair:
    t: np.ndarray
    X: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        t, X, xi = frozen(self.t), frozen(self.X), frozen(self.xi)
        if not (t.shape == X.shape == xi.shape) or t.ndim != 1 or t.size < 2:
            raise ConfigurationError("path arrays must be 1-D, equal length, >= 2 points")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(xi))):
            raise ConfigurationError("path values must be finite")
        uniform_step(t, "path grid")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def from_forward_backward(cls, t, x, x_prime):
        x = np.asarray(x, dtype=float)
        x_prime = np.asarray(x_prime, dtype=float)
        return cls(t, 0.5 * (x + x_prime), x_prime - x)

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    @property
    def X_a(self):
        """Initial mean coordinate ``(x_a + x_a') / 2``."""
        return float(self.X[0])


@dataclass(frozen=True)
class ThermalOscillator:
    mass: float
    omega: float
    beta: float
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "omega", "beta", "hbar"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive and finite")

    @property
    def kappa(self):
        m, w, b, h = self.mass, self.omega, self.beta, self.hbar
        return np.sqrt(m * w * np.tanh(0.5 * b * h * w) / (np.pi * h))


@dataclass(frozen=True)
class InfluencePhase:
    real_part: float
    imag_part: float

    def functional(self, hbar=1.0):
        return np.exp(1j * complex(self.real_part, self.imag_part) / hbar)

    def modulus(self, hbar=1.0):
        return float(np.exp(-self.imag_part / hbar))


def thermal_density_matrix(osc, q, q_prime, center=0.0, v_env=0.0):
    """Canonical density matrix of a harmonic oscillator centred on
    ``center``, boosted to mean velocity ``v_env`` by the phase factor
    ``exp(i m v_env (q - q') / hbar)``."""
    m, w, b, h = osc.mass, osc.omega, osc.beta, osc.hbar
    y = np.asarray(q, dtype=float) - center
    yp = np.asarray(q_prime, dtype=float) - center
    bhw = b * h * w
    # (y^2 + y'^2) cosh - 2 y y'  ==  (y - y')^2 cosh + 2 y y' (cosh - 1), stable for large bhw
    if bhw > 700:
        expo = -(m * w / (2 * h)) * ((y * y + yp * yp) - 2.0 * y * yp * 2.0 * np.exp(-bhw))
    else:
        expo = -(m * w / (2 * h * np.sinh(bhw))) * ((y * y + yp * yp) * np.cosh(bhw) - 2.0 * y * yp)
    boost = np.exp(1j * m * v_env * (np.asarray(q, dtype=float) - np.asarray(q_prime, dtype=float)) / h)
    return osc.kappa * np.exp(expo) * boost


def path_velocity(path, profile=STATIC):
    """``d/dt [X - D(t)]`` with ``D`` the environment displacement since the
    first grid point; centered differences, second-order one-sided at the ends.

    Differencing the co-moving path (rather than subtracting ``v_env``
    afterwards) keeps the Galilean shift identity exact on the grid.
    """
    shift = np.asarray(profile.displacement(path.t[0], path.t), dtype=float)
    return np.gradient(path.X - shift, path.dt, edge_order=2)


def _inner_trapezoid(kernel, f, dt):
    """``I_k = int_{t_0}^{t_k} kernel(t_k - s) f(s) ds`` by the trapezoid rule,
    for every grid point ``t_k``; ``kernel`` is indexed by lag."""
    n = f.size
    out = np.zeros(n)
    for k in range(1, n):
        s = kernel[k::-1] @ f[: k + 1]
        out[k] = dt * (s - 0.5 * (kernel[k] * f[0] + kernel[0] * f[k]))
    return out


def _outer_trapezoid(g, dt):
    return dt * (g.sum() - 0.5 * (g[0] + g[-1]))


def influence_phase(kernel_u, kernel_alpha, path, profile=STATIC):
    """Trapezoidal double quadrature of the influence phase over ``s <= t``."""
    dt = path.dt
    n = path.t.size
    for name, ker in (("u", kernel_u), ("alpha", kernel_alpha)):
        if abs(ker.dt - dt) > 1e-9 * dt:
            raise ConfigurationError(f"kernel {name} spacing does not match the path grid")
        if ker.values.size < n:
            raise ConfigurationError(f"kernel {name} does not cover every lag on the path grid")
    rel_velocity = path_velocity(path, profile)
    dissipative = _inner_trapezoid(kernel_u.values[:n], rel_velocity, dt)
    fluctuating = _inner_trapezoid(kernel_alpha.values[:n], path.xi, dt)
    re = _outer_trapezoid(path.xi * dissipative, dt)
    im = _outer_trapezoid(path.xi * fluctuating, dt)
    return InfluencePhase(float(re), float(im))
