"""Command line entry point: ``oscbath <subcommand> --scenario FILE``.

Exit status: 0 success, 1 failed acceptance gate, 2 configuration error,
3 numerical divergence.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import csvio
from ._grid import time_grid
from .ensemble_stats import (
    THREADS_ENV,
    coarse_grid,
    compare_trajectories,
    fdt_check,
    run_ensemble,
    simulate,
)
from .errors import ConfigurationError, DivergenceError, DomainError, ScenarioError
from .quantum_influence import PathPair, influence_phase
from .scenario import SUBCOMMANDS, load_scenario, validate_for
from .spectral import kernel_alpha, kernel_u
from .thermal_sampling import realization_stream, sample_thermal

log = logging.getLogger("oscbath")

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _traj_columns(traj):
    cols = {"t": traj.t, "x": traj.x, "v": traj.v}
    if traj.energy is not None:
        cols["energy"] = traj.energy
    return cols


def cmd_kernel(scn, out, opts):
    tau = scn.dt * np.arange(scn.n_steps + 1)
    cols = {"tau": tau, "u": kernel_u(scn.bath, tau).values}
    if scn.temperature is not None and scn.temperature > 0:
        cols["alpha"] = kernel_alpha(scn.bath, tau, scn.kT, scn.hbar).values
    csvio.write_table(os.path.join(out, "kernel.csv"), cols, scn.precision)
    return EXIT_OK


def cmd_sample(scn, out, opts):
    bath = scn.bath
    v_env = float(scn.profile.velocity(scn.t0))
    states = [sample_thermal(bath, scn.kT, scn.x0, v_env, scn.t0,
                             realization_stream(opts.seed or 0, i))
              for i in range(scn.n_samples)]
    first = states[0]
    csvio.write_table(os.path.join(out, "bath_state.csv"), {
        "n": np.arange(bath.n_osc), "omega": bath.frequencies, "mass": bath.masses,
        "q": first.positions, "qdot": first.velocities,
    }, scn.precision)
    q = np.array([s.positions for s in states])
    qd = np.array([s.velocities for s in states])
    pot = 0.5 * bath.stiffness * (q - scn.x0) ** 2
    kin = 0.5 * bath.masses * (qd - v_env) ** 2
    rows = [("n_samples", scn.n_samples, None, None),
            ("mean_potential_energy_per_oscillator", pot.mean(), None, None),
            ("mean_kinetic_energy_per_oscillator", kin.mean(), None, None),
            ("half_kT", 0.5 * scn.kT, None, None)]
    csvio.write_summary(os.path.join(out, "summary.csv"), rows, scn.precision)
    return EXIT_OK


def _simulate(engine):
    def run(scn, out, opts):
        traj, noise = simulate(scn, engine, opts.seed or 0, record_energy=(engine == "full"))
        csvio.write_table(os.path.join(out, "trajectory.csv"), _traj_columns(traj), scn.precision)
        if noise is not None:
            csvio.write_table(os.path.join(out, "noise.csv"), {"t": noise.t, "R": noise.R},
                              scn.precision)
        return EXIT_OK
    return run


def cmd_fdt(scn, out, opts):
    grid = time_grid(scn.t0, scn.dt, scn.n_steps)
    if not scn.fdt_full_resolution:
        grid = coarse_grid(grid, scn.fdt_n_grid)
    rep = fdt_check(scn.bath, scn.kT, scn.fdt_M, grid, scn.profile, opts.seed or 0, scn.x0,
                    scn.tolerance, scn.fdt_full_resolution)
    tt, ss = np.meshgrid(rep.t, rep.t, indexing="ij")
    csvio.write_table(os.path.join(out, "fdt_covariance.csv"), {
        "t": tt, "s": ss, "RR": rep.RR_mean, "RR_se": rep.RR_se, "kT_u": rep.expected,
    }, scn.precision)
    csvio.write_table(os.path.join(out, "fdt_mean.csv"),
                      {"t": rep.t, "R_mean": rep.R_mean, "R_se": rep.R_se}, scn.precision)
    csvio.write_summary(os.path.join(out, "summary.csv"), [
        ("M", rep.M, None, None),
        ("mean_max_over_se", rep.max_mean_ratio, 3.0, rep.mean_passed),
        ("covariance_max_normalized_deviation", rep.max_deviation, rep.tolerance,
         rep.covariance_passed),
        ("fdt", float(rep.passed), None, rep.passed),
    ], scn.precision)
    return EXIT_OK if rep.passed else EXIT_GATE


def cmd_compare(scn, out, opts):
    a_name, b_name = scn.compare_pair
    a, _ = simulate(scn, a_name, opts.seed or 0)
    b, _ = simulate(scn, b_name, opts.seed or 0)
    csvio.write_table(os.path.join(out, f"trajectory_{a_name}.csv"), _traj_columns(a), scn.precision)
    csvio.write_table(os.path.join(out, f"trajectory_{b_name}.csv"), _traj_columns(b), scn.precision)
    d = compare_trajectories(a, b)
    passed = d["rms"] < scn.rms_gate
    csvio.write_summary(os.path.join(out, "summary.csv"), [
        ("rms", d["rms"], scn.rms_gate, passed),
        ("max_abs", d["max_abs"], None, None),
    ], scn.precision)
    return EXIT_OK if passed else EXIT_GATE


def cmd_influence(scn, out, opts):
    data = csvio.read_table(scn.path_file)
    missing = [c for c in ("t", "X", "xi") if c not in data]
    if missing:
        raise ConfigurationError(f"path file lacks columns {missing}")
    path = PathPair(data["t"], data["X"], data["xi"])
    lags = path.dt * np.arange(path.t.size)
    ds = influence_phase(kernel_u(scn.bath, lags), kernel_alpha(scn.bath, lags, scn.kT, scn.hbar),
                         path, scn.profile)
    csvio.write_table(os.path.join(out, "influence.csv"), {
        "re_dS": [ds.real_part], "im_dS": [ds.imag_part], "abs_F": [ds.modulus(scn.hbar)],
    }, scn.precision)
    return EXIT_OK


def cmd_ensemble(scn, out, opts):
    rep = run_ensemble(scn, scn.M, opts.seed or 0, threads=opts.threads,
                       batch_size=scn.batch_size)
    csvio.write_table(os.path.join(out, "ensemble_timeseries.csv"), {
        "t": rep.t, "x_mean": rep.x_mean, "x_se": rep.x_se, "v_mean": rep.v_mean,
        "v_se": rep.v_se, "v_var": rep.v_var, "msd": rep.msd, "msd_se": rep.msd_se,
    }, scn.precision)
    if rep.RR_mean is not None:
        tt, ss = np.meshgrid(rep.noise_t, rep.noise_t, indexing="ij")
        csvio.write_table(os.path.join(out, "noise_covariance.csv"), {
            "t": tt, "s": ss, "RR": rep.RR_mean, "RR_se": rep.RR_se, "kT_u": rep.RR_expected,
        }, scn.precision)
        csvio.write_table(os.path.join(out, "noise_mean.csv"),
                          {"t": rep.noise_t, "R_mean": rep.R_mean, "R_se": rep.R_se},
                          scn.precision)
    rows = [("M", rep.M, None, None),
            ("window_mean_velocity", rep.window_v_mean, None, None),
            ("window_mean_velocity_se", rep.window_v_se, None, None),
            ("window_mean_x2", rep.window_x2_mean, None, None)]
    rows += [(c.metric, c.value, c.tolerance, c.passed) for c in rep.checks]
    csvio.write_summary(os.path.join(out, "summary.csv"), rows, scn.precision)
    return EXIT_OK if rep.passed else EXIT_GATE


COMMANDS = {
    "kernel": cmd_kernel,
    "sample": cmd_sample,
    "simulate-full": _simulate("full"),
    "simulate-gle": _simulate("gle"),
    "simulate-langevin": _simulate("langevin"),
    "fdt": cmd_fdt,
    "compare": cmd_compare,
    "influence": cmd_influence,
    "ensemble": cmd_ensemble,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="oscbath",
        description="Run an oscillator-bath scenario and write CSV results.",
        epilog="exit status: 0 success, 1 failed gate, 2 configuration error, 3 divergence",
    )
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--out", help="output directory (overrides [output].dir)")
    p.add_argument("--seed", type=int, help="base seed (overrides [rng].seed)")
    p.add_argument("--threads", type=int,
                   help=f"worker threads for ensembles (default ${THREADS_ENV} or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run_scenario(scenario, subcommand, out_dir, seed=None, threads=None):
    """Validate ``scenario`` for ``subcommand``, run it and write artifacts.

    Returns the exit status.
    """
    if seed is not None:
        scenario.seed = seed
    validate_for(scenario, subcommand)
    os.makedirs(out_dir, exist_ok=True)
    opts = argparse.Namespace(seed=scenario.seed, threads=threads)
    return COMMANDS[subcommand](scenario, out_dir, opts)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scn = load_scenario(args.scenario)
        out = args.out or scn.output_dir or "."
        status = run_scenario(scn, args.subcommand, out, args.seed, args.threads)
    except ScenarioError as err:
        for v in err.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, DomainError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    if status == EXIT_GATE:
        print("acceptance gate failed; see summary.csv", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
