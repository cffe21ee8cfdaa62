"""Realization ensembles, noise-moment estimators and trajectory comparison."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit

from ._grid import same_grid, time_grid
from .errors import ConfigurationError, ParameterError
from .gle_solver import (
    check_langevin_params,
    integrate_gle,
    integrate_gle_batch,
    integrate_langevin_batch,
    integrate_langevin_white,
    noise_force,
    noise_force_batch,
)
from .microdynamics import FreePotential, HarmonicPotential, integrate_full, integrate_full_batch
from .spectral import _cosine_sum, kernel_u
from .thermal_sampling import (
    STATIC,
    ConstantVelocity,
    realization_stream,
    sample_particle,
    sample_thermal,
    sample_thermal_batch,
)

THREADS_ENV = "OSCBATH_THREADS"
BATCH_SIZE = 256
MAX_NOISE_GRID = 32


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class Check:
    metric: str
    value: float
    expected: float
    tolerance: float
    passed: bool


# --- moment accumulation ------------------------------------------------------

@dataclass
class _Moments:
    """Count, mean and centred sum of squares; merged with Chan's update."""

    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, samples):
        samples = np.asarray(samples, dtype=float)
        mean = samples.mean(axis=0)
        return cls(samples.shape[0], mean, ((samples - mean) ** 2).sum(axis=0))

    def merge(self, other):
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        return _Moments(n, mean, m2)

    @property
    def var(self):
        if self.n < 2:
            return np.full_like(self.mean, np.nan)
        return self.m2 / (self.n - 1)

    @property
    def se(self):
        return np.sqrt(self.var / self.n)


def _merge_all(parts):
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)
    return acc


# --- FDT check ---------------------------------------------------------------

@dataclass
class FdtReport:
    t: np.ndarray
    M: int
    temperature: float
    R_mean: np.ndarray
    R_se: np.ndarray
    RR_mean: np.ndarray
    RR_se: np.ndarray
    expected: np.ndarray
    max_mean_ratio: float
    max_deviation: float
    tolerance: float
    mean_passed: bool
    covariance_passed: bool

    @property
    def passed(self):
        return self.mean_passed and self.covariance_passed


def kernel_on_lags(bath, t, s):
    lags = np.abs(np.subtract.outer(np.asarray(t, float), np.asarray(s, float)))
    return _cosine_sum(bath.frequencies, bath.stiffness, lags.ravel()).reshape(lags.shape)


def sample_noise_matrix(bath, temperature, M, grid, profile=STATIC, base_seed=0, x0=0.0,
                        first_index=0):
    """``R`` of ``M`` thermal realizations on ``grid``; shape ``(M, len(grid))``."""
    grid = np.asarray(grid, dtype=float)
    t0 = grid[0]
    v0 = float(profile.velocity(t0))
    rngs = [realization_stream(base_seed, first_index + i) for i in range(M)]
    q, qd = sample_thermal_batch(bath, temperature, x0, v0, rngs)
    return noise_force_batch(bath, q, qd, np.full(M, x0), v0, grid - t0)


def noise_moments(R, expected, temperature, u0, tolerance):
    """Moments of the sampled noise against ``k_B T u(t - s)``."""
    mom1 = _Moments.of(R)
    M = R.shape[0]
    prod = R[:, :, None] * R[:, None, :]
    RR = prod.mean(axis=0)
    RR_se = prod.std(axis=0, ddof=1) / np.sqrt(M) if M > 1 else np.full_like(RR, np.nan)
    R_se = mom1.se
    scale = temperature * u0
    dev = np.abs(RR - expected)
    if scale > 0:
        max_dev = float(dev.max() / scale)
        mean_ratio = float(np.max(np.abs(mom1.mean) / np.where(R_se > 0, R_se, np.inf)))
    else:
        max_dev = float(dev.max())
        mean_ratio = 0.0 if not np.any(mom1.mean) else np.inf
    mean_ok = bool(np.all(np.abs(mom1.mean) <= 3.0 * R_se))
    cov_ok = bool(np.all(dev <= tolerance * scale + 3.0 * RR_se))
    return mom1.mean, R_se, RR, RR_se, max_dev, mean_ratio, mean_ok, cov_ok


def fdt_check(bath, temperature, M, grid, profile=STATIC, base_seed=0, x0=0.0, tolerance=0.05,
              full_resolution=False):
    """Monte Carlo check of ``<R(t)> = 0`` and ``<R(t) R(s)> = k_B T u(t - s)``.

    Pass criteria: every ``|<R(t)>|`` within 3 standard errors, and every
    ``|<R R> - k_B T u|`` within ``tolerance * k_B T u(0)`` plus 3 standard
    errors of that entry.
    """
    if M < 100:
        raise ParameterError("fdt_check needs at least 100 realizations")
    if temperature < 0:
        raise ParameterError("temperature must be >= 0")
    grid = np.asarray(grid, dtype=float)
    if grid.size > MAX_NOISE_GRID and not full_resolution:
        raise ConfigurationError(
            f"noise moment grid limited to {MAX_NOISE_GRID} points; pass full_resolution=True"
        )
    R = sample_noise_matrix(bath, temperature, M, grid, profile, base_seed, x0)
    expected = temperature * kernel_on_lags(bath, grid, grid)
    u0 = float(bath.stiffness.sum())
    (R_mean, R_se, RR, RR_se, max_dev, mean_ratio, mean_ok, cov_ok) = noise_moments(
        R, expected, temperature, u0, tolerance)
    return FdtReport(grid, M, temperature, R_mean, R_se, RR, RR_se, expected, mean_ratio,
                     max_dev, tolerance, mean_ok, cov_ok)


def coarse_grid(t, n_points=MAX_NOISE_GRID):
    """Evenly strided subset of ``t`` (always including both ends)."""
    t = np.asarray(t, dtype=float)
    if t.size <= n_points:
        return t.copy()
    idx = np.unique(np.round(np.linspace(0, t.size - 1, n_points)).astype(int))
    return t[idx]


# --- trajectory comparison -----------------------------------------------------

def compare_trajectories(a, b):
    if not same_grid(a.t, b.t, rtol=1e-9):
        raise ConfigurationError("trajectories are on different time grids")
    d = np.asarray(a.x) - np.asarray(b.x)
    return {"rms": float(np.sqrt(np.mean(d * d))), "max_abs": float(np.max(np.abs(d)))}


# --- ensembles -------------------------------------------------------------------

@dataclass
class EnsembleReport:
    M: int
    engine: str
    t: np.ndarray
    x_mean: np.ndarray
    x_se: np.ndarray
    v_mean: np.ndarray
    v_se: np.ndarray
    v_var: np.ndarray
    msd: np.ndarray
    msd_se: np.ndarray
    window_start: float
    window_v_mean: float
    window_v_se: float
    window_x2_mean: float
    window_x2_se: float
    noise_t: Optional[np.ndarray] = None
    R_mean: Optional[np.ndarray] = None
    R_se: Optional[np.ndarray] = None
    RR_mean: Optional[np.ndarray] = None
    RR_se: Optional[np.ndarray] = None
    RR_expected: Optional[np.ndarray] = None
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


@dataclass
class _BatchResult:
    x: _Moments
    v: _Moments
    msd: _Moments
    window_v: np.ndarray
    window_x2: np.ndarray
    R: Optional[np.ndarray]


def _run_batch(scn, engine, first, count, base_seed, window, noise_idx, u_values):
    t0, dt, n = scn.t0, scn.dt, scn.n_steps
    rngs = [realization_stream(base_seed, first + i) for i in range(count)]
    inits = [sample_particle(scn.x0, scn.v0, scn.x_width, scn.v_width, rng) for rng in rngs]
    x0 = np.array([p.x0 for p in inits])
    v0 = np.array([p.v0 for p in inits])
    R_coarse = None
    if engine == "langevin":
        noise = np.zeros((count, n))
        if scn.kT > 0 and scn.eta > 0:
            for i, rng in enumerate(rngs):
                noise[i] = rng.standard_normal(n)
        res = integrate_langevin_batch(scn.particle, scn.eta, scn.kT, x0, v0, scn.profile, t0, dt,
                                       n, noise, first_index=first)
    else:
        venv0 = float(scn.profile.velocity(t0))
        # each realization is centred on its own particle position
        q = np.empty((count, scn.bath.n_osc))
        qd = np.empty_like(q)
        for i, rng in enumerate(rngs):
            qi, qdi = sample_thermal_batch(scn.bath, scn.kT, x0[i], venv0, [rng])
            q[i], qd[i] = qi[0], qdi[0]
        if engine == "full":
            res = integrate_full_batch(scn.particle, scn.bath, q, qd, x0, v0, scn.profile, t0, dt,
                                       n, first_index=first)
        else:
            R = noise_force_batch(scn.bath, q, qd, x0, venv0, dt * np.arange(n + 1))
            res = integrate_gle_batch(scn.particle, u_values, R, x0, v0, scn.profile, t0, dt, n,
                                      first_index=first)
        R_coarse = noise_force_batch(scn.bath, q, qd, x0, venv0, dt * noise_idx)
    x, v = res["x"], res["v"]
    disp = x - x0[:, None]
    return _BatchResult(
        _Moments.of(x), _Moments.of(v), _Moments.of(disp * disp),
        v[:, window:].mean(axis=1), (x[:, window:] ** 2).mean(axis=1), R_coarse,
    )


def run_ensemble(scenario, M, base_seed, threads=None, batch_size=BATCH_SIZE, engine=None,
                 noise_points=MAX_NOISE_GRID):
    """Run ``M`` independent realizations of ``scenario``.

    Realization ``i`` draws everything from ``realization_stream(base_seed, i)``;
    batches are fixed-size and reduced in index order, so the report does not
    depend on ``threads``.
    """
    M = int(M)
    if M < 1:
        raise ParameterError("ensemble size must be >= 1")
    engine = engine or scenario.engine
    if engine not in ("langevin", "gle", "full"):
        raise ConfigurationError(f"unknown ensemble engine {engine!r}")
    if engine == "langevin":
        if scenario.eta is None:
            raise ConfigurationError("white-noise engine needs a friction coefficient")
        check_langevin_params(scenario.eta, scenario.kT, scenario.dt)
    elif scenario.bath is None:
        raise ConfigurationError(f"engine {engine!r} needs a bath")
    threads = threads or default_threads()
    n = scenario.n_steps
    t = time_grid(scenario.t0, scenario.dt, n)
    window = n // 2
    noise_idx = np.unique(np.round(np.linspace(0, n, min(noise_points, n + 1))).astype(int))
    u_values = kernel_u(scenario.bath, scenario.dt * np.arange(n + 1)).values if engine == "gle" else None

    starts = list(range(0, M, batch_size))
    jobs = [(s, min(batch_size, M - s)) for s in starts]

    def work(job):
        return _run_batch(scenario, engine, job[0], job[1], base_seed, window, noise_idx, u_values)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]

    xm = _merge_all([p.x for p in parts])
    vm = _merge_all([p.v for p in parts])
    dm = _merge_all([p.msd for p in parts])
    wv = _Moments.of(np.concatenate([p.window_v for p in parts]))
    wx = _Moments.of(np.concatenate([p.window_x2 for p in parts]))
    report = EnsembleReport(
        M=M, engine=engine, t=t,
        x_mean=xm.mean, x_se=xm.se, v_mean=vm.mean, v_se=vm.se, v_var=vm.var,
        msd=dm.mean, msd_se=dm.se, window_start=float(t[window]),
        window_v_mean=float(wv.mean), window_v_se=float(wv.se),
        window_x2_mean=float(wx.mean), window_x2_se=float(wx.se),
    )
    if engine != "langevin":
        R = np.concatenate([p.R for p in parts])
        nt = t[noise_idx]
        expected = scenario.kT * kernel_on_lags(scenario.bath, nt, nt)
        u0 = float(scenario.bath.stiffness.sum())
        (report.R_mean, report.R_se, report.RR_mean, report.RR_se, *_rest) = noise_moments(
            R, expected, scenario.kT, u0, scenario.tolerance)
        report.noise_t = nt
        report.RR_expected = expected
    report.checks = ensemble_checks(report, scenario)
    return report


# --- report checks -------------------------------------------------------------

def fit_relaxation(t, y, se=None):
    """Fit ``y = A exp(-rate (t - t[0]))``; returns ``(A, rate)``.

    The window runs until ``|y|`` first falls below ``e^-3 |y[0]|``.  With
    ``se`` given the fit is weighted by the standard error of each point.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if y[0] == 0:
        raise ValueError("no initial offset to relax")
    below = np.flatnonzero(np.abs(y) < np.exp(-3.0) * abs(y[0]))
    end = int(below[0]) if below.size else y.size
    end = max(end, 3)
    tau = t[:end] - t[0]
    sigma = None
    if se is not None:
        se = np.nan_to_num(np.asarray(se, dtype=float)[:end])
        sigma = np.sqrt(se**2 + (1e-3 * abs(y[0])) ** 2)
    guess = 3.0 / max(tau[-1], 1e-300)
    (A, rate), _ = curve_fit(lambda s, A, r: A * np.exp(-r * s), tau, y[:end], p0=(y[0], guess),
                             sigma=sigma)
    return float(A), float(rate)


def _rel_check(metric, value, expected, tol):
    return Check(metric, value, expected, tol, bool(abs(value - expected) <= tol * abs(expected)))


def ensemble_checks(report, scn):
    """Statistical gates that apply to the scenario at hand."""
    checks = []
    if report.M < 2:
        return checks
    eta = scn.eta
    M_p = scn.particle.mass
    constant_env = isinstance(scn.profile, ConstantVelocity)
    pot = scn.particle.potential
    horizon = report.t[-1] - report.t[0]
    if eta and constant_env and report.engine == "langevin":
        venv = scn.profile.v
        if isinstance(pot, FreePotential) and scn.v0 != venv and scn.v_width == 0:
            try:
                _, rate = fit_relaxation(report.t, report.v_mean - venv, report.v_se)
                checks.append(_rel_check("velocity_relaxation_rate", rate, eta / M_p, 0.02))
            except (RuntimeError, ValueError):
                pass
        if isinstance(pot, FreePotential) and horizon >= 10 * M_p / eta:
            se = report.window_v_se
            checks.append(Check("stationary_mean_velocity", report.window_v_mean, venv,
                                3.0 * se, bool(abs(report.window_v_mean - venv) <= 3.0 * se)))
        if isinstance(pot, FreePotential) and venv == 0 and horizon >= 10 * M_p / eta and scn.kT > 0:
            # past ten velocity relaxation times the MSD is linear in t
            sel = report.t >= report.t[0] + 10 * M_p / eta
            slope = float(np.polyfit(report.t[sel], report.msd[sel], 1)[0])
            checks.append(_rel_check("msd_slope", slope, 2 * scn.kT / eta, 0.05))
        if (isinstance(pot, HarmonicPotential) and venv == 0 and pot.omega0 > 0 and scn.kT > 0
                and horizon >= 10 * M_p / eta):
            checks.append(_rel_check("stationary_x2", report.window_x2_mean,
                                     scn.kT / (M_p * pot.omega0**2), 0.03))
    if report.RR_mean is not None and report.M >= 2:
        scale = scn.kT * float(scn.bath.stiffness.sum())
        dev = np.abs(report.RR_mean - report.RR_expected)
        ok = bool(np.all(dev <= scn.tolerance * scale + 3.0 * report.RR_se))
        checks.append(Check("noise_covariance_max_dev", float(dev.max() / scale) if scale > 0 else 0.0,
                            0.0, scn.tolerance, ok))
        ok_mean = bool(np.all(np.abs(report.R_mean) <= 3.0 * report.R_se))
        checks.append(Check("noise_mean_max_abs", float(np.max(np.abs(report.R_mean))), 0.0,
                            float(3.0 * np.max(report.R_se)), ok_mean))
    return checks


def simulate(scenario, engine, base_seed=0, index=0, record_energy=False):
    """One realization drawn exactly as realization ``index`` of an ensemble.

    Returns ``(trajectory, noise)``; ``noise`` is a NoiseRecord for the
    bath-based engines and ``None`` for the white-noise engine.
    """
    scn = scenario
    rng = realization_stream(base_seed, index)
    init = sample_particle(scn.x0, scn.v0, scn.x_width, scn.v_width, rng)
    t = time_grid(scn.t0, scn.dt, scn.n_steps)
    if engine == "langevin":
        if scn.eta is None:
            raise ConfigurationError("white-noise engine needs a friction coefficient")
        traj = integrate_langevin_white(scn.particle, scn.eta, scn.kT, init, scn.profile, scn.dt,
                                        scn.n_steps, rng, t0=scn.t0)
        return traj, None
    if scn.bath is None:
        raise ConfigurationError(f"engine {engine!r} needs a bath")
    state = sample_thermal(scn.bath, scn.kT, init.x0, float(scn.profile.velocity(scn.t0)),
                           scn.t0, rng)
    noise = noise_force(scn.bath, state, init.x0, scn.profile, t)
    if engine == "full":
        traj = integrate_full(scn.particle, scn.bath, state, init, scn.profile, scn.dt, scn.n_steps,
                              record_energy=record_energy)
    elif engine == "gle":
        traj = integrate_gle(scn.particle, kernel_u(scn.bath, t - scn.t0), noise, init,
                             scn.profile, scn.dt, scn.n_steps)
    else:
        raise ConfigurationError(f"unknown engine {engine!r}")
    return traj, noise
