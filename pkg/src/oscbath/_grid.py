import numpy as np

from .errors import ConfigurationError


def frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def uniform_step(grid, name="grid", rtol=1e-9):
    """Return the spacing of a uniform grid, raising if it is not uniform."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ConfigurationError(f"{name} must be a non-empty 1-D array")
    if grid.size == 1:
        return 0.0
    steps = np.diff(grid)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if h <= 0 or np.max(np.abs(steps - h)) > rtol * max(abs(h), np.max(np.abs(grid))):
        raise ConfigurationError(f"{name} is not uniform and ascending")
    return float(h)


def time_grid(t0, dt, n_steps):
    return t0 + dt * np.arange(n_steps + 1)


def same_grid(a, b, rtol=1e-12):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    return bool(np.all(np.abs(a - b) <= rtol * scale))
