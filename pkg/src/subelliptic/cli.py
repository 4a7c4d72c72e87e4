"""Command line entry point: ``subelliptic {solve,sweep,distance,dimension,verify} CONFIG``.

Exit codes: 0 success (all checks pass), 1 a check failed, 2 a check was
inconclusive, 3 the solver did not converge, 4 bad usage, precondition or I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config
from .eigensolve import EigenResult, SolverConfig, p_star, solve_p, solve_p2
from .errors import SolverError, SubellipticError
from .frames import homogeneous_dimension, pointwise_Q_field
from .grid import ScalarField, build_grid
from .io import write_field, write_table
from .metric import build_reachability_graph, control_distance_field
from . import verify

log = logging.getLogger("subelliptic")

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2, 3, 4
COMMANDS = ("solve", "sweep", "distance", "dimension", "verify")
COMMAND_OPTIONS = {
    "solve": (),
    "sweep": ("p_list",),
    "distance": ("source", "stencil_radius"),
    "dimension": ("s_max",),
    "verify": ("suite",),
}
RESULT_COLUMNS = (
    "p", "lambda1", "poincare_constant", "residual", "iterations",
    "resolution", "frame", "omega_measure", "Q", "p_star",
)


def first_eigenpair(frame, grid, cfg: SolverConfig) -> EigenResult:
    return solve_p2(frame, grid, cfg) if cfg.p == 2 else solve_p(frame, grid, cfg)


def _result_row(res: EigenResult, grid, frame, Q: int) -> list:
    return [
        res.p, res.lambda1, res.poincare_constant, res.residual, res.iterations,
        "x".join(map(str, grid.resolution)), frame.label, grid.measure, Q, p_star(res.p, Q),
    ]


class Runner:
    def __init__(self, cfg: RunConfig, outdir: Path):
        self.cfg = cfg
        self.outdir = outdir
        self.frame = cfg.build_frame()
        self.grid = build_grid(cfg.build_domain(), cfg.resolution)

    def out(self, name: str) -> Path:
        return self.outdir / name

    def dimension_Q(self) -> tuple[int, object]:
        return homogeneous_dimension(self.frame, self.grid.sample_points(), s_max=self.cfg.options["s_max"])

    def solve(self) -> int:
        Q, _ = self.dimension_Q()
        res = first_eigenpair(self.frame, self.grid, self.cfg.solver)
        write_table(self.out("result.csv"), RESULT_COLUMNS, [_result_row(res, self.grid, self.frame, Q)], self.cfg.digest)
        write_field(res.u1, self.out("u1.csv"), self.cfg.digest)
        print(f"lambda1 = {res.lambda1!r}")
        return EXIT_OK

    def sweep(self) -> int:
        plist = self.cfg.options.get("p_list")
        if not plist:
            raise SubellipticError("sweep needs options.p_list")
        Q, _ = self.dimension_Q()
        rows = []
        for p in plist:
            res = first_eigenpair(self.frame, self.grid, replace(self.cfg.solver, p=p))
            rows.append(_result_row(res, self.grid, self.frame, Q))
            print(f"p = {p!r}: lambda1 = {res.lambda1!r}")
        write_table(self.out("sweep.csv"), RESULT_COLUMNS, rows, self.cfg.digest)
        return EXIT_OK

    def distance(self) -> int:
        source = self.cfg.options.get("source")
        if source is None:
            raise SubellipticError("distance needs options.source")
        graph = build_reachability_graph(self.frame, self.grid, self.cfg.options["stencil_radius"])
        df = control_distance_field(graph, np.asarray(source, dtype=float))
        write_field(ScalarField.zeros(self.grid), self.out("distance.csv"), self.cfg.digest, values=df.values, value_name="d")
        print(f"reachable nodes = {int(df.reachable.sum())} of {self.grid.n_interior}")
        return EXIT_OK

    def dimension(self) -> int:
        Q, ss = self.dimension_Q()
        qx = pointwise_Q_field(ss, self.grid.interior_points)
        write_table(
            self.out("dimension.csv"), ("frame", "Q", "step", "spanning_vectors"),
            [[self.frame.label, Q, ss.step, len(ss.vectors)]], self.cfg.digest,
        )
        write_field(ScalarField(self.grid, qx.astype(float)), self.out("q_field.csv"), self.cfg.digest)
        print(f"Q = {Q}")
        return EXIT_OK

    def verify(self) -> int:
        suite = self.cfg.options["suite"]
        if suite == "config":
            reports = self._config_checks()
        else:
            reports = verify.run_suite(suite, seed=self.cfg.solver.seed)
        write_table(
            self.out("verify.csv"), ("name", "passed", "statistic", "threshold", "verdict"),
            [[r.name, r.passed, r.statistic, r.threshold, r.verdict] for r in reports], self.cfg.digest,
        )
        for r in reports:
            print(f"{r.verdict:12s} {r.name}: {r.statistic!r} ({r.details})")
        if any(r.verdict == "fail" for r in reports):
            return EXIT_FAIL
        if any(r.inconclusive for r in reports):
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def _config_checks(self):
        cfg = self.cfg.solver
        res = first_eigenpair(self.frame, self.grid, cfg)
        reports = [
            verify.positivity_check(res),
            verify.sign_change_check(res.u1),
            verify.poincare_check(self.frame, self.grid, res, 100, cfg.seed),
        ]
        if cfg.p != 2:
            reports.append(verify.simplicity_check(self.frame, self.grid, cfg, 3))
        return reports


def run_command(cmd: str, cfg: RunConfig, outdir=None) -> int:
    """Execute ``cmd`` and return its exit code; artifacts go to the output directory."""
    if cmd not in COMMANDS:
        log.error("unknown command %r", cmd)
        return EXIT_USAGE
    for key in cfg.present_options:
        if key not in COMMAND_OPTIONS[cmd]:
            log.warning("option '%s' is ignored by '%s'", key, cmd)
    outdir = Path(outdir if outdir is not None else cfg.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        runner = Runner(cfg, outdir)
        return getattr(runner, cmd)()
    except SolverError as exc:
        log.error("solver did not converge: %s", exc)
        traj = getattr(exc, "trajectory", [])
        log.error("last residual %s; %d recorded Rayleigh values", exc.residual, len(traj))
        if traj:
            try:
                write_table(outdir / "diagnostics.csv", ("iteration", "rayleigh"), enumerate(traj), cfg.digest)
            except OSError:
                pass
        return EXIT_NONCONVERGED
    except (SubellipticError, KeyError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subelliptic", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", help="YAML configuration file")
    ap.add_argument("-o", "--output", help="output directory (overrides output.directory)")
    ap.add_argument("-q", "--quiet", action="store_true", help="do not echo the effective config")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
    except (OSError, SubellipticError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    if not args.quiet:
        print(cfg.to_json())
    return run_command(args.command, cfg, args.output)


if __name__ == "__main__":
    sys.exit(main())
