"""Command-line front end: ``cdqvi gen | solve | sweep | oracle``.

Exit codes: 0 solved, 1 failure, 2 usage, 3 I/O or malformed instance,
4 capability (oracle size cap).

Output is deterministic for identical invocations. Wall times are shown
only with ``--timing``; otherwise the time column is left blank.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .contact import (
    ContactSpec, FromFile, SpringLattice, contact_instance, load_instance, random_instance,
    save_instance, with_friction,
)
from .core import InvalidInstanceError
from .oracle import CapabilityError, enumerate_kkt
from .outer import PHI_GRID, SolveReport, SolverParams, solve_aqvi, sweep

EXIT_SOLVED, EXIT_FAILURE, EXIT_USAGE, EXIT_IO, EXIT_CAPABILITY = 0, 1, 2, 3, 4

CSV_COLUMNS = ("problem", "phi", "status", "outer_iters", "inner_newton", "inner_ls",
               "h_evals", "jh_evals", "time_s", "residual_inf")


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (np.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"must be a positive number: {text!r}")
    return x


def _nonneg_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (np.isfinite(x) and x >= 0):
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text!r}")
    return x


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return n


def _phi_list(text: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("empty phi list")
    return [_positive_float(p.strip()) for p in parts]


def _default_jobs() -> int:
    raw = os.environ.get("CDQVI_JOBS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# -- formatting ---------------------------------------------------------------

def _num(x: float) -> str:
    return repr(float(x))


def report_row(rep: SolveReport, timing: bool) -> dict:
    return {
        "problem": rep.problem,
        "phi": rep.phi,
        "status": rep.status.value,
        "outer_iters": rep.outer_iterations,
        "inner_newton": rep.inner_newton,
        "inner_ls": rep.inner_linesearch,
        "h_evals": rep.h_evals,
        "jh_evals": rep.jh_evals,
        "time_s": rep.wall_time if timing else None,
        "residual_inf": rep.final_residual,
    }


def report_json(rep: SolveReport, timing: bool) -> dict:
    out = report_row(rep, timing)
    out.update(
        inner_fallback=rep.inner_fallback,
        inner_crash=rep.inner_crash,
        eps_history=rep.eps_history,
        delta_history=rep.delta_history,
        inner_status=rep.inner_status,
        solution={
            "tau": rep.solution.tau.tolist(),
            "lam": rep.solution.lam.tolist(),
            "sigma": rep.solution.sigma.tolist(),
        },
    )
    return out


def format_csv(reports: list[SolveReport], timing: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        row = report_row(rep, timing)
        cells = []
        for col in CSV_COLUMNS:
            v = row[col]
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(_num(v))
            else:
                cells.append(str(v))
        w.writerow(cells)
    return buf.getvalue()


def format_table(reports: list[SolveReport], timing: bool) -> str:
    head = f"{'problem':<14}{'phi':>9}{'iter':>6}{'newton':>8}{'ls':>6}{'H':>7}{'JH':>6}" \
           f"{'time':>9}{'|Y|inf':>11}  status"
    lines = [head, "-" * len(head)]
    for rep in reports:
        t = f"{rep.wall_time:9.3f}" if timing else f"{'-':>9}"
        phi = "-" if rep.phi is None else f"{rep.phi:.0e}"
        lines.append(f"{rep.problem[:13]:<14}{phi:>9}{rep.outer_iterations:>6}"
                     f"{rep.inner_newton:>8}{rep.inner_linesearch:>6}{rep.h_evals:>7}"
                     f"{rep.jh_evals:>6}{t}{rep.final_residual:>11.2e}  {rep.status.value}")
    return "\n".join(lines) + "\n"


def _summary(reports: list[SolveReport]) -> str:
    solved = sum(r.solved for r in reports)
    return f"# solved {solved}/{len(reports)}, failed {len(reports) - solved}"


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _render(reports: list[SolveReport], fmt: str, timing: bool, summary: bool) -> str:
    if fmt == "json":
        payload: dict = {"reports": [report_json(r, timing) for r in reports]}
        if summary:
            solved = sum(r.solved for r in reports)
            payload["summary"] = {"solved": solved, "failed": len(reports) - solved}
        return json.dumps(payload, indent=1) + "\n"
    if fmt == "csv":
        return format_csv(reports, timing)
    text = format_table(reports, timing)
    return text + _summary(reports) + "\n" if summary else text


# -- commands -------------------------------------------------------------------

def _params(args) -> SolverParams:
    kw = {}
    for flag, field in (("tol", "outer_tol"), ("max_outer", "max_outer"), ("eps0", "eps0"),
                        ("delta0", "delta0"), ("gamma", "gamma"), ("inner_tol", "inner_tol0"),
                        ("inner_max_iter", "inner_max_iter")):
        v = getattr(args, flag, None)
        if v is not None:
            kw[field] = v
    try:
        return SolverParams(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _spec_from_args(args, phi: float) -> ContactSpec:
    if getattr(args, "stiffness_file", None):
        model = FromFile(args.stiffness_file)
    else:
        model = SpringLattice(args.kt, args.kn, args.coupling)
    return ContactSpec(args.nodes, phi, args.l, model)


def cmd_gen(args) -> int:
    if args.seed is not None:
        if args.stiffness_file:
            raise UsageError("--seed and --stiffness-file are mutually exclusive")
        inst = random_instance(args.nodes, args.phi, np.random.default_rng(args.seed), l=args.l)
        meta = dict(inst.meta, seed=args.seed)
        if args.name:
            meta["name"] = args.name
        inst = type(inst)(inst.A, inst.B, inst.c, inst.D, inst.e, phi=inst.phi, l=inst.l, meta=meta)
    else:
        inst = contact_instance(_spec_from_args(args, args.phi), name=args.name)
    save_instance(inst, args.output)
    return EXIT_SOLVED


def _problem_name(inst, path: str) -> str:
    return str(inst.meta.get("name") or Path(path).stem)


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.phi is not None:
        inst = with_friction(inst, args.phi)
    rep = solve_aqvi(inst, _params(args), problem=_problem_name(inst, args.instance))
    _emit(_render([rep], args.format, args.timing, summary=False), args.output)
    return EXIT_SOLVED if rep.solved else EXIT_FAILURE


def cmd_sweep(args) -> int:
    if (args.instance is None) == (args.nodes is None):
        raise UsageError("give either an instance file or --nodes")
    if args.instance is not None:
        inst = load_instance(args.instance)
        name = _problem_name(inst, args.instance)
    else:
        inst = contact_instance(_spec_from_args(args, args.phis[0]))
        name = f"r{args.nodes}"
    reports = sweep([(name, inst)], args.phis, _params(args), jobs=args.jobs)
    _emit(_render(reports, args.format, args.timing, summary=True), args.output)
    if args.format == "csv":
        print(_summary(reports), file=sys.stderr)
    return EXIT_SOLVED if all(r.solved for r in reports) else EXIT_FAILURE


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    points = enumerate_kkt(inst, tol=args.tol)
    if args.format == "json":
        text = json.dumps({"points": [
            {"tau": p.tau.tolist(), "lam": p.lam.tolist(), "active_set": list(p.active_set),
             "residual": p.residual} for p in points]}, indent=1) + "\n"
    else:
        lines = [f"# {len(points)} KKT point(s)"]
        for i, p in enumerate(points):
            lines.append(f"[{i}] active={list(p.active_set)} residual={p.residual:.3e}")
            lines.append("    tau = " + " ".join(f"{x + 0.0:.10g}" for x in p.tau))
            lines.append("    lam = " + " ".join(f"{x + 0.0:.10g}" for x in p.lam))
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_SOLVED


# -- parser ------------------------------------------------------------------------

def _add_spec_flags(p, nodes_required: bool):
    p.add_argument("--nodes", type=_positive_int, required=nodes_required,
                   help="contact nodes r (N = 2r)")
    p.add_argument("--l", type=_positive_float, default=1000.0, help="normal stress bound")
    p.add_argument("--kt", type=_positive_float, default=1.0, help="tangential spring stiffness")
    p.add_argument("--kn", type=_positive_float, default=1.0, help="normal spring stiffness")
    p.add_argument("--coupling", type=_nonneg_float, default=0.3,
                   help="spring coupling between adjacent nodes")
    p.add_argument("--stiffness-file", help="read C (or D) from a file instead")


def _add_solver_flags(p):
    p.add_argument("--tol", type=_positive_float, help="outer tolerance on |Y|inf (1e-4)")
    p.add_argument("--max-outer", type=int, help="outer iteration cap (20)")
    p.add_argument("--eps0", type=_positive_float)
    p.add_argument("--delta0", type=_positive_float)
    p.add_argument("--gamma", type=_positive_float)
    p.add_argument("--inner-tol", type=_positive_float, help="first inner tolerance")
    p.add_argument("--inner-max-iter", type=_positive_int)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--timing", action="store_true", help="report wall times (not deterministic)")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdqvi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a contact instance file")
    _add_spec_flags(p, nodes_required=True)
    p.add_argument("--phi", type=_positive_float, default=1.0, help="friction coefficient")
    p.add_argument("--seed", type=int, help="random SPD stiffness and load from this seed")
    p.add_argument("--name", help="problem id stored in meta")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    p.add_argument("--phi", type=_positive_float, help="rebuild constraints for this phi")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a list of friction coefficients")
    p.add_argument("instance", nargs="?")
    _add_spec_flags(p, nodes_required=False)
    p.add_argument("--phis", type=_phi_list, default=list(PHI_GRID),
                   help="comma-separated list (default 1e-3,...,1e5)")
    p.add_argument("--jobs", type=_positive_int, default=_default_jobs(),
                   help="concurrent solves (default $CDQVI_JOBS or 1)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="enumerate KKT points of a small instance")
    p.add_argument("instance")
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except CapabilityError as exc:
        print(f"cdqvi: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (OSError, InvalidInstanceError) as exc:
        print(f"cdqvi: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"cdqvi: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE  # unreachable: parser.error exits


if __name__ == "__main__":
    sys.exit(main())
