"""Oscillator-bath model of a Brownian particle in a static or moving
thermal environment: bath microdynamics, generalized Langevin dynamics,
fluctuation-dissipation checks and the discretized influence phase."""

from .errors import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    ParameterError,
    ScenarioError,
)
from .spectral import (
    CouplingMode,
    DiscreteBath,
    Kernel,
    TabulatedDensity,
    WhiteNoiseDensity,
    discretize,
    kernel_alpha,
    kernel_u,
    white_noise_density,
)
from .thermal_sampling import (
    STATIC,
    BathState,
    ConstantVelocity,
    ParticleInit,
    RampVelocity,
    SinusoidVelocity,
    TabulatedVelocity,
    realization_stream,
    sample_particle,
    sample_thermal,
    velocity_at,
)
from .microdynamics import (
    FreePotential,
    HarmonicPotential,
    ParticleSpec,
    TabulatedForce,
    Trajectory,
    integrate_full,
)
from .gle_solver import NoiseRecord, integrate_gle, integrate_langevin_white, noise_force
from .quantum_influence import (
    InfluencePhase,
    PathPair,
    ThermalOscillator,
    influence_phase,
    thermal_density_matrix,
)
from .ensemble_stats import EnsembleReport, compare_trajectories, fdt_check, run_ensemble, simulate
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"
