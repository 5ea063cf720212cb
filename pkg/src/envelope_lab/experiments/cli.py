"""Command-line driver: one subcommand per study, plus ``solve`` for single runs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 a study missed its acceptance band (only with ``--check``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..ansatz import FAMILIES
from ..solvers import NumericalFailure
from .config import ConfigError, RunConfig, config_from_dict, load_config
from .report import emit_outputs
from .studies import STUDIES, run_kernel_bound

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4


def _eps_list(text: str):
    try:
        vals = tuple(float(eval_fraction(x)) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}: {exc}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty eps list")
    return vals


def eval_fraction(text: str) -> float:
    """Parse '0.125' or '1/8'."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _formats(text: str):
    fmts = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = set(fmts) - {"csv", "json", "svg"}
    if bad:
        raise argparse.ArgumentTypeError(f"unknown formats {sorted(bad)}")
    return fmts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="envelope-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON or TOML file with RunConfig fields")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="seed for random profiles")
    common.add_argument("--format", type=_formats, default=("csv", "json", "svg"), help="e.g. csv,json,svg")
    common.add_argument("--eps", type=_eps_list, help="comma-separated eps values, e.g. 1/4,1/8")
    common.add_argument("--profile", choices=FAMILIES, help="profile family")
    common.add_argument("--check", action="store_true", help="exit 4 if the study misses its band")
    for name in list(STUDIES) + ["kernel-bound"]:
        sub.add_parser(name, parents=[common], help=f"run the {name} study")
    solve = sub.add_parser("solve", parents=[common], help="single run with snapshot dumps")
    solve.add_argument("--equation", choices=("kg", "amplitude", "nls"), default="kg")
    return parser


def resolve_config(args, study: str) -> RunConfig:
    cfg = load_config(args.config, RunConfig(study=study)) if args.config else RunConfig(study=study)
    overrides = {"study": study}
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        overrides["seed"] = args.seed
    if args.eps is not None:
        overrides["eps_list"] = args.eps
    if args.profile is not None:
        overrides["profile"] = {"family": args.profile}
    return config_from_dict(overrides, cfg)


def run_solve(cfg: RunConfig, equation: str, out: Path):
    from ..ansatz import build_initial_data, physical_grid_for
    from ..snapshots import dump_trajectory
    from ..solvers import KGState, SolverConfig, complexify, solve_amplitude, solve_kg, solve_nls
    from ..spectral import resample
    from .studies import _schedule, amplitude_grid, profile_for, slow_grid

    eps = cfg.eps_list[0]
    gs = slow_grid(cfg)
    psi0 = profile_for(cfg, gs, eps)
    if equation == "kg":
        pg = physical_grid_for(gs, eps)
        u0, ut0 = build_initial_data(psi0, eps, pg)
        dt, stride = _schedule(cfg.T / eps ** 2, cfg.samples, cfg.dt_phys)
        scfg = SolverConfig(dt, cfg.scheme, sample_stride=stride)
        traj = solve_kg(KGState(0.0, complexify(u0, ut0)), cfg.T / eps ** 2, scfg)
    elif equation == "amplitude":
        ga = amplitude_grid(psi0, eps)
        dt, stride = _schedule(cfg.T, cfg.samples, eps ** 2 / 8)
        scfg = SolverConfig(dt, cfg.scheme, sample_stride=stride)
        traj = solve_amplitude(resample(psi0, ga.n), eps, cfg.T, scfg)
    else:
        scfg = SolverConfig(cfg.T / cfg.samples / cfg.nls_substeps, cfg.nls_scheme, sample_stride=cfg.nls_substeps)
        traj = solve_nls(psi0, cfg.T, scfg)
    path, side = dump_trajectory(traj, out / f"{equation}.snap", scfg.scheme)
    print(f"wrote {len(traj)} snapshots to {path} (metadata in {side.name})")
    return traj


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args, args.command)
        out = Path(cfg.out_dir)
        if args.command == "solve":
            run_solve(cfg, args.equation, out)
            return EXIT_OK
        if args.command == "kernel-bound":
            samples, report = run_kernel_bound(cfg)
            header = ["eps", "eta", "sign", "tau", "xi", "value", "bound", "ratio", "converged", "panels", "alt_value"]
            rows = [[getattr(s, h) for h in header] for s in samples]
            emit_outputs(report, out, args.format, extra_tables={"kernel-samples": (header, rows)})
        else:
            report = STUDIES[args.command](cfg)
            emit_outputs(report, out, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining validation errors come from inconsistent parameters
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.summary_line())
    if report.failures:
        for e, msg in report.failures.items():
            print(f"  eps={e}: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.check and report.passed is False:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
