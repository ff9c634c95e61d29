"""Configuration-driven runs shared by the command line and the verify suites."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import spectral
from .abp2d import AbpParams
from .config import RunConfig
from .diagnostics import check_bounds, check_gronwall, mass_drift, write_csv
from .errors import ConfigurationError
from .gt1d import GtParams
from .initial import GT_PRESETS, MollifierSpec, gt_preset, load_csv, mollify, preset, validate
from .integrate import IntegratorConfig, integrate
from .snapshots import state_fields, write_snapshot

log = logging.getLogger(__name__)

MASS_TOL = 1e-11

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_VIOLATION = 2
EXIT_CONFIG = 64


@dataclass
class RunSetup:
    state: object
    params: object
    distributional: bool
    problems: list


def build_run(cfg: RunConfig) -> RunSetup:
    """Initial state and model parameters described by ``cfg``.

    Admissibility problems of the initial data are returned, not raised.
    """
    cfg.validate()
    if cfg.model == "gt1d":
        grid = spectral.SpatialGrid(cfg.nx)
        if cfg.init_file:
            raise ConfigurationError("init.file is only supported for model.name=abp2d")
        state = gt_preset(cfg.preset, grid, cfg.phi)
        return RunSetup(state, GtParams(cfg.Pe, grid), False, validate(state))
    grid = spectral.SpatialGrid(cfg.nx, cfg.ny)
    if cfg.preset in GT_PRESETS:
        raise ConfigurationError(f"preset {cfg.preset!r} belongs to model.name=gt1d")
    spec = load_csv(cfg.init_file) if cfg.init_file else preset(cfg.preset, grid, cfg.phi, cfg.theta_star)
    if spec.grid != grid:
        raise ConfigurationError(f"initial data grid {spec.grid.shape} differs from grid.nx/ny {grid.shape}")
    problems = validate(spec)
    state = spec.to_state(cfg.n)
    if cfg.mollify_eps is not None:
        state = mollify(state, MollifierSpec(cfg.mollify_eps, cfg.mollify_alpha))
    params = AbpParams(cfg.Pe, cfg.De, cfg.n, grid, phi_mass=None, j1_a0_weight=cfg.j1_a0_weight)
    return RunSetup(state, params, spec.kind == "dirac", problems)


@dataclass
class Outcome:
    exit_code: int
    records: list = field(default_factory=list)
    messages: list = field(default_factory=list)


def simulate(cfg: RunConfig, outdir=None) -> Outcome:
    """Run ``cfg``; write diagnostics, snapshots and the resolved config.

    Exit code semantics follow the command line (0, 1, 2); configuration
    problems propagate as :class:`ConfigurationError`.
    """
    setup = build_run(cfg)
    state, params, distributional = setup.state, setup.params, setup.distributional
    out = Outcome(EXIT_OK)
    if setup.problems:
        out.messages.append(f"inadmissible initial data ({len(setup.problems)} nodes), worst {setup.problems[0]}")
        if cfg.on_violation == "fail":
            log.error(out.messages[-1])
            out.exit_code = EXIT_VIOLATION
            return out
    outdir = Path(outdir if outdir is not None else cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.resolved.txt").write_text(cfg.to_text())
    snapdir = outdir / "snapshots"
    index = []
    observers = []
    if cfg.snapshots:
        snapdir.mkdir(exist_ok=True)

        def save(st, rec):
            name = f"snap_{len(index):05d}.abps"
            write_snapshot(snapdir / name, state_fields(st))
            index.append((len(index), st.time, name))

        observers.append(save)

    previous = spectral.get_workers()
    spectral.set_workers(cfg.effective_workers())
    try:
        icfg = IntegratorConfig(dt=cfg.dt, scheme=cfg.scheme, cfl_safety=cfg.cfl_safety, max_steps=cfg.max_steps)
        result = integrate(state, params, cfg.T, icfg, observers=observers, cadence=cfg.cadence)
    finally:
        spectral.set_workers(previous)

    with (outdir / "diagnostics.csv").open("w", newline="") as fh:
        write_csv(result.records, fh)
    if cfg.snapshots:
        with (snapdir / "snapshots.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "time", "file"])
            for i, t, name in index:
                w.writerow([i, repr(float(t)), name])

    out.records = result.records
    drift = mass_drift(result.records)
    if drift > MASS_TOL:
        out.messages.append(f"mass drift {drift:.3e} exceeds {MASS_TOL:g}")
    bounds = check_bounds(result.records)
    if distributional:
        # angular truncations of a Dirac mass oscillate in sign; only rho is checked
        rho_ok = bounds.rho_min >= -1e-6 and bounds.rho_max <= 1 + 1e-6
        if not rho_ok:
            out.messages.append(f"rho left [0, 1]: [{bounds.rho_min!r}, {bounds.rho_max!r}]")
    elif not bounds.passed:
        out.messages.append(f"invariant region violated: min f={bounds.min_f!r}, "
                            f"rho in [{bounds.rho_min!r}, {bounds.rho_max!r}]")
    if bounds.clip_activations and not distributional:
        out.messages.append(f"mobility cutoff active at {bounds.clip_activations} node-steps")
    if len(result.records) >= 2:
        gr = check_gronwall(result.records, params)
        if not gr.passed:
            out.messages.append(f"energy exceeds envelope (ratio {gr.worst_ratio!r})")
    if out.messages:
        level = logging.ERROR if cfg.on_violation == "fail" else logging.WARNING
        for m in out.messages:
            log.log(level, m)
        if cfg.on_violation == "fail":
            out.exit_code = EXIT_VIOLATION
    return out

