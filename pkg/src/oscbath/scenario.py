"""Scenario files: TOML documents with flat sections.

Example::

    [particle]
    mass = 1.0
    [bath]
    density = "white_noise"
    eta = 1.0
    cutoff = 20.0
    n_osc = 64
    [environment]
    temperature = 1.0
    [integrator]
    dt = 1e-3
    n_steps = 10000

Every problem in a document is reported at once through
:class:`~oscbath.errors.ScenarioError`.
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .csvio import PRECISION, read_table
from .errors import ScenarioError
from .microdynamics import FreePotential, HarmonicPotential, ParticleSpec, TabulatedForce
from .spectral import CouplingMode, DiscreteBath, TabulatedDensity, discretize, white_noise_density
from .thermal_sampling import (
    STATIC,
    ConstantVelocity,
    RampVelocity,
    SinusoidVelocity,
    TabulatedVelocity,
)

SUBCOMMANDS = ("kernel", "sample", "simulate-full", "simulate-gle", "simulate-langevin", "fdt",
               "compare", "influence", "ensemble")
ENGINES = ("full", "gle", "langevin")

SCHEMA = {
    "constants": {"k_B", "hbar"},
    "particle": {"mass", "potential", "omega0", "force_file", "x0", "v0", "x_width", "v_width"},
    "bath": {"density", "eta", "osc_mass", "cutoff", "n_osc", "coupling", "omega", "g",
             "table_file", "frequencies", "masses"},
    "environment": {"temperature", "profile", "v", "v0", "accel", "amplitude",
                    "angular_frequency", "phase", "t", "v_values", "profile_file"},
    "integrator": {"dt", "n_steps", "horizon", "t0"},
    "rng": {"seed"},
    "ensemble": {"M", "engine", "batch_size", "tolerance"},
    "fdt": {"M", "n_grid", "full_resolution", "tolerance"},
    "compare": {"a", "b", "rms_gate"},
    "sample": {"n_samples"},
    "influence": {"path_file"},
    "output": {"dir", "precision"},
}


@dataclass
class Scenario:
    k_B: float = 1.0
    hbar: float = 1.0
    particle: Optional[ParticleSpec] = None
    x0: float = 0.0
    v0: float = 0.0
    x_width: float = 0.0
    v_width: float = 0.0
    density: object = None
    bath: Optional[DiscreteBath] = None
    eta: Optional[float] = None
    temperature: Optional[float] = None
    profile: object = STATIC
    dt: Optional[float] = None
    n_steps: Optional[int] = None
    t0: float = 0.0
    seed: Optional[int] = None
    M: Optional[int] = None
    engine: str = "langevin"
    batch_size: int = 256
    tolerance: float = 0.05
    fdt_M: Optional[int] = None
    fdt_n_grid: int = 32
    fdt_full_resolution: bool = False
    compare_pair: tuple = ("full", "gle")
    rms_gate: float = 1e-3
    n_samples: int = 1
    path_file: Optional[str] = None
    output_dir: Optional[str] = None
    precision: int = PRECISION
    sections: set = field(default_factory=set)

    @property
    def kT(self):
        """Thermal energy ``k_B T``."""
        return self.k_B * self.temperature


class _Collector:
    def __init__(self, doc, base_dir):
        self.doc = doc
        self.base_dir = base_dir
        self.errors = []

    def section(self, name):
        return self.doc.get(name, {})

    def fail(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def number(self, sec, key, default=None, required=False, positive=False, nonneg=False,
               integer=False):
        path = f"{sec}.{key}"
        table = self.section(sec)
        if key not in table:
            if required:
                self.fail(path, "required key missing")
            return default
        value = table[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
            return default
        if integer and not (isinstance(value, int) or float(value).is_integer()):
            self.fail(path, f"expected an integer, got {value!r}")
            return default
        if not math.isfinite(value):
            self.fail(path, "must be finite")
            return default
        if positive and not value > 0:
            self.fail(path, f"must be > 0, got {value!r}")
            return default
        if nonneg and value < 0:
            self.fail(path, f"must be >= 0, got {value!r}")
            return default
        return int(value) if integer else float(value)

    def choice(self, sec, key, options, default=None, required=False):
        path = f"{sec}.{key}"
        table = self.section(sec)
        if key not in table:
            if required:
                self.fail(path, "required key missing")
            return default
        value = table[key]
        if value not in options:
            self.fail(path, f"must be one of {', '.join(options)}; got {value!r}")
            return default
        return value

    def array(self, sec, key, required=False):
        path = f"{sec}.{key}"
        table = self.section(sec)
        if key not in table:
            if required:
                self.fail(path, "required key missing")
            return None
        value = table[key]
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            self.fail(path, "expected an array of numbers")
            return None
        return np.array(value, dtype=float)

    def file(self, sec, key, required=False):
        path = f"{sec}.{key}"
        table = self.section(sec)
        if key not in table:
            if required:
                self.fail(path, "required key missing")
            return None
        value = table[key]
        if not isinstance(value, str):
            self.fail(path, "expected a file path string")
            return None
        full = value if os.path.isabs(value) else os.path.join(self.base_dir, value)
        if not os.path.isfile(full):
            self.fail(path, f"file not found: {value}")
            return None
        return full

    def table(self, sec, key, columns):
        full = self.file(sec, key, required=True)
        if full is None:
            return None
        try:
            data = read_table(full)
        except (OSError, ValueError) as err:
            self.fail(f"{sec}.{key}", str(err))
            return None
        missing = [c for c in columns if c not in data]
        if missing:
            self.fail(f"{sec}.{key}", f"missing columns {missing}")
            return None
        return data

    def guarded(self, path, build):
        try:
            return build()
        except ValueError as err:
            self.fail(path, str(err))
            return None


def parse_scenario(text, base_dir="."):
    """Parse and validate a scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ScenarioError([f"syntax error: {err}"]) from None
    c = _Collector(doc, base_dir)
    for name, value in doc.items():
        if name not in SCHEMA:
            c.fail(name, "unknown section" if isinstance(value, dict) else "unknown key")
            continue
        if not isinstance(value, dict):
            c.fail(name, "expected a section")
            continue
        for key in value:
            if key not in SCHEMA[name]:
                c.fail(f"{name}.{key}", "unknown key")
    doc = {k: v for k, v in doc.items() if isinstance(v, dict)}
    c.doc = doc

    s = Scenario(sections=set(doc))
    s.k_B = c.number("constants", "k_B", 1.0, positive=True)
    s.hbar = c.number("constants", "hbar", 1.0, positive=True)
    _parse_particle(c, s)
    _parse_bath(c, s)
    _parse_environment(c, s)
    _parse_integrator(c, s)
    _parse_runs(c, s)
    if c.errors:
        raise ScenarioError(c.errors)
    return s


def load_scenario(path):
    with open(path) as fh:
        text = fh.read()
    return parse_scenario(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _parse_particle(c, s):
    if "particle" not in c.doc:
        return
    mass = c.number("particle", "mass", required=True, positive=True)
    kind = c.choice("particle", "potential", ("free", "harmonic", "tabulated"), "free")
    potential = FreePotential()
    if kind == "harmonic":
        w0 = c.number("particle", "omega0", required=True, nonneg=True)
        if w0 is not None:
            potential = HarmonicPotential(w0)
    elif kind == "tabulated":
        data = c.table("particle", "force_file", ("x", "f"))
        if data is not None:
            potential = c.guarded("particle.force_file", lambda: TabulatedForce(data["x"], data["f"]))
    s.x0 = c.number("particle", "x0", 0.0)
    s.v0 = c.number("particle", "v0", 0.0)
    s.x_width = c.number("particle", "x_width", 0.0, nonneg=True)
    s.v_width = c.number("particle", "v_width", 0.0, nonneg=True)
    if mass is not None and potential is not None:
        s.particle = ParticleSpec(mass, potential)


def _parse_bath(c, s):
    if "bath" not in c.doc:
        return
    kind = c.choice("bath", "density", ("white_noise", "tabulated", "explicit"), required=True)
    mode = c.choice("bath", "coupling", ("invariant", "perturbative"), "invariant")
    mode = CouplingMode(mode) if mode else CouplingMode.INVARIANT
    s.eta = c.number("bath", "eta", positive=True, required=(kind == "white_noise"))
    if kind == "explicit":
        w = c.array("bath", "frequencies", required=True)
        m = c.array("bath", "masses", required=True)
        if w is not None and m is not None:
            s.bath = c.guarded("bath.frequencies", lambda: DiscreteBath(w, m, mode))
        return
    n_osc = c.number("bath", "n_osc", required=True, positive=True, integer=True)
    osc_mass = c.number("bath", "osc_mass", 1.0, positive=True)
    if kind == "white_noise":
        cutoff = c.number("bath", "cutoff", required=True, positive=True)
        if None not in (s.eta, cutoff, osc_mass):
            s.density = white_noise_density(s.eta, osc_mass, cutoff)
    elif kind == "tabulated":
        if "table_file" in c.section("bath"):
            data = c.table("bath", "table_file", ("omega", "g"))
            w, g = (data["omega"], data["g"]) if data is not None else (None, None)
        else:
            w, g = c.array("bath", "omega", required=True), c.array("bath", "g", required=True)
        if w is not None and g is not None and osc_mass is not None:
            s.density = c.guarded("bath.g", lambda: TabulatedDensity(w, g, osc_mass))
    if s.density is not None and n_osc is not None:
        s.bath = c.guarded("bath.n_osc", lambda: discretize(s.density, n_osc, coupling_mode=mode))


def _parse_environment(c, s):
    if "environment" not in c.doc:
        return
    s.temperature = c.number("environment", "temperature", required=True, nonneg=True)
    kind = c.choice("environment", "profile", ("constant", "ramp", "sinusoid", "tabulated"),
                    "constant")
    num = lambda key, **kw: c.number("environment", key, **kw)  # noqa: E731
    if kind == "constant":
        s.profile = ConstantVelocity(num("v", default=0.0))
    elif kind == "ramp":
        v0, a = num("v0", default=0.0), num("accel", required=True)
        if a is not None:
            s.profile = RampVelocity(v0, a)
    elif kind == "sinusoid":
        amp, w = num("amplitude", required=True), num("angular_frequency", required=True)
        phase = num("phase", default=0.0)
        if amp is not None and w is not None:
            s.profile = SinusoidVelocity(amp, w, phase)
    elif kind == "tabulated":
        if "profile_file" in c.section("environment"):
            data = c.table("environment", "profile_file", ("t", "v"))
            t, v = (data["t"], data["v"]) if data is not None else (None, None)
        else:
            t, v = c.array("environment", "t", required=True), c.array("environment", "v_values", required=True)
        if t is not None and v is not None:
            s.profile = c.guarded("environment.t", lambda: TabulatedVelocity(t, v)) or STATIC


def _parse_integrator(c, s):
    if "integrator" not in c.doc:
        return
    s.dt = c.number("integrator", "dt", required=True, positive=True)
    s.t0 = c.number("integrator", "t0", 0.0)
    table = c.section("integrator")
    if "n_steps" in table and "horizon" in table:
        c.fail("integrator.horizon", "give either n_steps or horizon, not both")
    elif "horizon" in table:
        horizon = c.number("integrator", "horizon", positive=True)
        if horizon is not None and s.dt is not None:
            s.n_steps = max(1, int(round(horizon / s.dt)))
    else:
        s.n_steps = c.number("integrator", "n_steps", required=True, positive=True, integer=True)


def _parse_runs(c, s):
    s.seed = c.number("rng", "seed", None, nonneg=True, integer=True)
    if "ensemble" in c.doc:
        s.M = c.number("ensemble", "M", required=True, positive=True, integer=True)
        s.engine = c.choice("ensemble", "engine", ENGINES, "langevin")
        s.batch_size = c.number("ensemble", "batch_size", 256, positive=True, integer=True)
        s.tolerance = c.number("ensemble", "tolerance", 0.05, nonneg=True)
    if "fdt" in c.doc:
        s.fdt_M = c.number("fdt", "M", required=True, positive=True, integer=True)
        if s.fdt_M is not None and s.fdt_M < 100:
            c.fail("fdt.M", "must be >= 100")
        s.fdt_n_grid = c.number("fdt", "n_grid", 32, positive=True, integer=True)
        full = c.section("fdt").get("full_resolution", False)
        if not isinstance(full, bool):
            c.fail("fdt.full_resolution", "expected true or false")
            full = False
        s.fdt_full_resolution = full
        if s.fdt_n_grid is not None and s.fdt_n_grid > 32 and not full:
            c.fail("fdt.n_grid", "must be <= 32 unless full_resolution = true")
        s.tolerance = c.number("fdt", "tolerance", s.tolerance, nonneg=True)
    if "compare" in c.doc:
        a = c.choice("compare", "a", ENGINES, "full")
        b = c.choice("compare", "b", ENGINES, "gle")
        s.compare_pair = (a, b)
        s.rms_gate = c.number("compare", "rms_gate", 1e-3, positive=True)
    if "sample" in c.doc:
        s.n_samples = c.number("sample", "n_samples", 1, positive=True, integer=True)
    if "influence" in c.doc:
        s.path_file = c.file("influence", "path_file", required=True)
    if "output" in c.doc:
        d = c.section("output").get("dir")
        if d is not None and not isinstance(d, str):
            c.fail("output.dir", "expected a string")
        elif d is not None:
            s.output_dir = d if os.path.isabs(d) else os.path.join(c.base_dir, d)
        s.precision = c.number("output", "precision", PRECISION, positive=True, integer=True)


# sections each subcommand needs, beyond what parsing already enforced
REQUIREMENTS = {
    "kernel": ("bath", "integrator"),
    "sample": ("bath", "environment"),
    "simulate-full": ("particle", "bath", "environment", "integrator"),
    "simulate-gle": ("particle", "bath", "environment", "integrator"),
    "simulate-langevin": ("particle", "environment", "integrator"),
    "fdt": ("bath", "environment", "integrator", "fdt"),
    "compare": ("particle", "environment", "integrator"),
    "influence": ("bath", "environment", "influence"),
    "ensemble": ("particle", "environment", "integrator", "ensemble"),
}


def validate_for(s, subcommand):
    """Raise :class:`ScenarioError` listing everything ``subcommand`` lacks."""
    if subcommand not in SUBCOMMANDS:
        raise ScenarioError([f"unknown subcommand {subcommand!r}"])
    errors = [f"{sec}: section required by '{subcommand}'"
              for sec in REQUIREMENTS[subcommand] if sec not in s.sections]
    engines = set()
    if subcommand == "compare":
        engines = set(s.compare_pair)
    elif subcommand == "ensemble":
        engines = {s.engine}
    elif subcommand == "simulate-langevin":
        engines = {"langevin"}
    if "langevin" in engines and s.eta is None:
        errors.append("bath.eta: friction coefficient required by the white-noise Langevin engine")
    if engines & {"full", "gle"} and "bath" not in s.sections:
        errors.append(f"bath: section required by '{subcommand}'")
    if subcommand == "influence" and s.temperature is not None and s.temperature <= 0:
        errors.append("environment.temperature: must be > 0 for the quantum noise kernel")
    stochastic = subcommand in ("sample", "fdt", "compare", "ensemble", "simulate-full",
                                "simulate-gle", "simulate-langevin")
    needs_seed = stochastic and (subcommand in ("fdt", "ensemble")
                                 or (s.temperature or 0) > 0 or s.x_width > 0 or s.v_width > 0)
    if needs_seed and s.seed is None:
        errors.append("rng.seed: required (or pass --seed) for stochastic runs")
    if errors:
        raise ScenarioError(errors)
