"""Command line: ``crowdabp {simulate,kernel,verify,mollify}``.

Exit codes: 0 success, 1 numeric failure, 2 invariant violation or failed
check, 64 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import KEYS, RunConfig
from .errors import ConfigurationError, NumericFailure
from .initial import MollifierSpec, mollify, preset
from .kernel import phi1d, phi3d
from .runner import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VIOLATION, build_run, simulate
from .snapshots import state_fields, write_snapshot
from .spectral import TWO_PI, SpatialGrid
from .verify import SUITES, run_suite

log = logging.getLogger("crowdabp")


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 64)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_config_flags(p):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    for key in KEYS:
        p.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg.set(k.strip(), v)
    for key in KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg.set(key, value)
    return cfg.validate()


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    outcome = simulate(cfg, args.out or cfg.output_dir)
    for m in outcome.messages:
        print(f"violation: {m}", file=sys.stderr)
    last = outcome.records[-1] if outcome.records else None
    if last is not None:
        print(f"t={last.time!r} mass={last.mass!r} energy={last.energy!r} "
              f"phase_l2={last.phase_l2!r} dual_norm={last.dual_norm!r}")
    return outcome.exit_code


def cmd_kernel(args) -> int:
    t = args.t
    if not t > 0:
        raise ConfigurationError(f"t must be positive, got {t}")
    if args.three_d:
        coords = np.array([args.x, args.y, args.theta], dtype=float)
        value = float(phi3d(t, coords))
    else:
        value = float(phi1d(t, args.x))
    print(f"{value:.15g}")
    if args.check_mass:
        nodes = args.nodes
        x = TWO_PI * np.arange(nodes) / nodes
        mass = float(phi1d(t, x).sum() * TWO_PI / nodes)
        if args.three_d:
            mass = mass ** 3
        ok = abs(mass - 1.0) <= 1e-10
        print(f"unit_mass,{'PASS' if ok else 'FAIL'},{mass!r},|m-1| <= 1e-10")
        return EXIT_OK if ok else EXIT_VIOLATION
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise ConfigurationError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    print("name,status,value,bound")
    results = run_suite(args.suite, emit=lambda line: print(line, flush=True))
    failed = [r for r in results if not r.passed]
    print(f"# {len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_VIOLATION


def cmd_mollify(args) -> int:
    cfg = _resolve_config(args)
    if cfg.model != "abp2d":
        raise ConfigurationError("mollify works on 2D data (model.name=abp2d)")
    eps = args.eps if args.eps is not None else cfg.mollify_eps
    if eps is None:
        raise ConfigurationError("mollify needs --eps or init.mollify_eps")
    cfg.mollify_eps = None
    setup = build_run(cfg)
    spec = MollifierSpec(eps, cfg.mollify_alpha)
    smooth = mollify(setup.state, spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_snapshot(out, state_fields(smooth))
    rho = smooth.a[0]
    print(f"eps={eps!r} alpha={cfg.mollify_alpha!r} mass_in={setup.state.mass()!r} "
          f"mass_out={smooth.mass()!r} rho_min={float(rho.min())!r} rho_max={float(rho.max())!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crowdabp", description="Crowded active Brownian particle solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a 2D or 1D simulation")
    _add_config_flags(p)
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kernel", help="evaluate the periodic heat kernel")
    p.add_argument("t", type=float)
    p.add_argument("x", type=float)
    p.add_argument("--3d", dest="three_d", action="store_true", help="product kernel in (x, y, theta)")
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--check-mass", action="store_true", help="also check unit mass by quadrature")
    p.add_argument("--nodes", type=int, default=256)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help=f"one of {', '.join(sorted(SUITES))}")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mollify", help="mollify initial data and write a snapshot")
    _add_config_flags(p)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--out", default="mollified.abps")
    p.set_defaults(func=cmd_mollify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
