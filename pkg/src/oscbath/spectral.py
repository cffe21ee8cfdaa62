"""Spectral densities, finite bath discretization and kernel tabulation.

The bath is a set of oscillators with frequencies ``omega_n`` and effective
masses ``m_n``.  A continuous density ``G(omega)`` is turned into such a set by
a midpoint rule, ``m_n = m * G(omega_n) * d_omega``, so that sums over the
bath are quadratures of the corresponding frequency integrals.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._grid import frozen, uniform_step
from .errors import ConfigurationError, ParameterError


class CouplingMode(str, enum.Enum):
    INVARIANT = "invariant"
    PERTURBATIVE = "perturbative"


@dataclass(frozen=True)
class WhiteNoiseDensity:
    """``G(omega) = 2 eta / (pi m omega^2)`` on ``(0, cutoff]``, zero beyond."""

    eta: float
    osc_mass: float
    cutoff: float

    def __post_init__(self):
        for name in ("eta", "osc_mass", "cutoff"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be positive and finite, got {value}")

    @property
    def omega_min(self):
        return 0.0

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        inside = (omega > 0) & (omega <= self.cutoff)
        safe = np.where(inside, omega, 1.0)
        return np.where(inside, 2.0 * self.eta / (np.pi * self.osc_mass * safe**2), 0.0)


@dataclass(frozen=True)
class TabulatedDensity:
    """Piecewise-linear density on an ascending frequency grid."""

    omega_grid: np.ndarray
    g_values: np.ndarray
    osc_mass: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.omega_grid, dtype=float)
        g = np.asarray(self.g_values, dtype=float)
        if w.ndim != 1 or w.shape != g.shape:
            raise ParameterError("omega_grid and g_values must be 1-D arrays of equal length")
        if w.size == 0:
            raise ParameterError("tabulated density is empty")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(g))):
            raise ParameterError("tabulated density contains non-finite values")
        if np.any(np.diff(w) <= 0):
            raise ParameterError("omega_grid must be strictly ascending")
        if w[0] < 0:
            raise ParameterError("omega_grid must be nonnegative")
        if np.any(g < 0):
            raise ParameterError("density values must be nonnegative")
        if not self.osc_mass > 0:
            raise ParameterError("osc_mass must be positive")
        object.__setattr__(self, "omega_grid", frozen(w))
        object.__setattr__(self, "g_values", frozen(g))

    @property
    def cutoff(self):
        return float(self.omega_grid[-1])

    @property
    def omega_min(self):
        return float(self.omega_grid[0])

    def __call__(self, omega):
        return np.interp(omega, self.omega_grid, self.g_values, left=0.0, right=0.0)


SpectralDensity = WhiteNoiseDensity | TabulatedDensity


def white_noise_density(eta, osc_mass, cutoff):
    return WhiteNoiseDensity(float(eta), float(osc_mass), float(cutoff))


@dataclass(frozen=True)
class DiscreteBath:
    frequencies: np.ndarray
    masses: np.ndarray
    coupling_mode: CouplingMode = CouplingMode.INVARIANT

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if w.ndim != 1 or w.shape != m.shape:
            raise ParameterError("frequencies and masses must be 1-D arrays of equal length")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ParameterError("frequencies must be positive and finite")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ParameterError("masses must be positive and finite")
        object.__setattr__(self, "frequencies", frozen(w))
        object.__setattr__(self, "masses", frozen(m))
        object.__setattr__(self, "coupling_mode", CouplingMode(self.coupling_mode))

    @property
    def n_osc(self):
        return self.frequencies.size

    @property
    def stiffness(self):
        """Coupling spring constants ``m_n omega_n^2``."""
        return self.masses * self.frequencies**2

    @property
    def max_frequency(self):
        return float(self.frequencies.max()) if self.n_osc else 0.0

    def with_mode(self, mode):
        return DiscreteBath(self.frequencies, self.masses, CouplingMode(mode))


def empty_bath(mode=CouplingMode.INVARIANT):
    return DiscreteBath(np.empty(0), np.empty(0), mode)


def discretize(density, n_osc, scheme="midpoint-uniform", coupling_mode=CouplingMode.INVARIANT):
    """Midpoint-rule bath for ``density``.

    Cells split ``(omega_min, cutoff]`` into ``n_osc`` equal intervals; each
    oscillator sits at a cell midpoint with mass ``m * G(omega_n) * d_omega``.
    Cells where the density vanishes are dropped.
    """
    if scheme != "midpoint-uniform":
        raise ParameterError(f"unknown discretization scheme {scheme!r}")
    n_osc = int(n_osc)
    if n_osc < 1:
        raise ParameterError("n_osc must be >= 1")
    lo, hi = density.omega_min, density.cutoff
    d_omega = (hi - lo) / n_osc
    omega = lo + d_omega * (np.arange(n_osc) + 0.5)
    masses = density.osc_mass * density(omega) * d_omega
    keep = masses > 0
    if not np.any(keep):
        raise ParameterError("density vanishes on every cell; bath would be empty")
    return DiscreteBath(omega[keep], masses[keep], coupling_mode)


@dataclass(frozen=True)
class Kernel:
    tau_grid: np.ndarray
    values: np.ndarray
    dt: float = field(init=False)

    def __post_init__(self):
        tau = frozen(self.tau_grid)
        vals = frozen(self.values)
        if tau.shape != vals.shape:
            raise ConfigurationError("kernel grid and values differ in length")
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("kernel values must be finite")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "dt", _check_lag_grid(tau))


def _check_lag_grid(tau_grid):
    tau = np.asarray(tau_grid, dtype=float)
    h = uniform_step(tau, "tau_grid")
    if abs(tau[0]) > 1e-12 * max(1.0, abs(h)):
        raise ConfigurationError("tau_grid must start at 0")
    return h


def _cosine_sum(frequencies, weights, tau, block=4096):
    out = np.zeros(tau.size)
    if frequencies.size == 0:
        return out
    for start in range(0, tau.size, block):
        sl = slice(start, start + block)
        out[sl] = np.cos(np.outer(tau[sl], frequencies)) @ weights
    return out


def kernel_u(bath, tau_grid):
    """Memory kernel ``u(tau) = sum_n m_n omega_n^2 cos(omega_n tau)``."""
    tau = np.asarray(tau_grid, dtype=float)
    _check_lag_grid(tau)
    return Kernel(tau, _cosine_sum(bath.frequencies, bath.stiffness, tau))


def alpha_weights(bath, temperature, hbar=1.0):
    if not temperature > 0:
        raise ParameterError("temperature (k_B T) must be positive for the quantum noise kernel")
    if not hbar > 0:
        raise ParameterError("hbar must be positive")
    w = bath.frequencies
    x = hbar * w / (2.0 * temperature)
    return bath.masses * hbar * w**3 / 2.0 / np.tanh(x)


def kernel_alpha(bath, tau_grid, temperature, hbar=1.0):
    """Quantum noise kernel
    ``alpha(tau) = sum_n (m_n hbar omega_n^3 / 2) coth(hbar omega_n / 2 k_B T) cos(omega_n tau)``.
    """
    tau = np.asarray(tau_grid, dtype=float)
    _check_lag_grid(tau)
    weights = alpha_weights(bath, temperature, hbar)
    return Kernel(tau, _cosine_sum(bath.frequencies, weights, tau))
