"""Command-line interface.

Subcommands: validate, solve, sample, measure, integrate, clt, mcmc, timing.
Exit codes: 0 success, 1 validation or solver failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bench.clt import INTEGRANDS as CLT_INTEGRANDS
from .bench.clt import clt_check
from .bench.integration import IntegrationConfig, mc_integrate
from .bench.mcmc import McmcConfig, run_mcmc
from .bench.timing import TIMED, sampling_time_study
from .catalog import KINDS, Construction
from .concordance import construction_report, empirical_report, exact_report
from .errors import SegsampleError
from .optimizer import UniformityProblem, solve_standard_uniform, solve_strict_ctm
from .sampling import draw, draw_generalized, iid_source
from .segments import build_segment_set, canonicalize, load_segment_set, uniformity_residuals
from .streams import make_rng


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in str(text).split(",") if t.strip()]


# --------------------------------------------------------------------------- #
# parser
# --------------------------------------------------------------------------- #


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    g.add_argument("--out", default=None, help="output path (default stdout)")
    g.add_argument("--config", default=None, help="JSON file of defaults; CLI flags take precedence")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker cap")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    return p


def _construction_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--construction", choices=KINDS, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--b", type=int, default=None)
    p.add_argument("--offsets", type=_int_list, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--base", default=None, help="ilh base construction kind (ccv uses offsets 1)")
    p.add_argument("--exchangeable", action="store_true", default=False)
    p.add_argument("--segments", default=None, help="segment-set JSON file")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="segsample", description="Uniform antithetic vectors from segment sets.")
    parser.add_argument("--version", action="version", version=f"segsample {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="uniformity and constant-sum checks")
    p.add_argument("--segments", required=False, default=None)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("solve", parents=[common], help="solve for a coordinate matrix")
    p.add_argument("kind", choices=("circulant", "standard", "ctm"))
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--offsets", type=_int_list, default=None)
    p.add_argument("--segments", default=None, help="structure for standard/ctm")

    p = sub.add_parser("sample", parents=[common], help="draw uniform vectors")
    _construction_args(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--v-model", choices=("common", "iid"), default=None)

    p = sub.add_parser("measure", parents=[common], help="Kendall's tau and Spearman's rho")
    _construction_args(p)
    p.add_argument("--method", choices=("exact", "empirical"), default="exact")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--v-model", choices=("common", "iid"), default=None)

    p = sub.add_parser("integrate", parents=[common], help="Wang-Sloan integration study")
    p.add_argument("--integrand", default="wang-sloan")
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--p", type=int, default=20)
    p.add_argument("--n-points", type=_int_list, default=[10, 100, 1000])
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--schemes", type=_str_list, default=["mc-iid", "glh-ccv"])
    p.add_argument("--point-file", default=None)

    p = sub.add_parser("clt", parents=[common], help="variance of Latin hypercube averages")
    p.add_argument("--integrand", choices=sorted(CLT_INTEGRANDS), default="product2")
    p.add_argument("--d-list", type=_int_list, default=[16, 64, 256, 1024])
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--base", choices=("iid", "aj"), default="iid")

    p = sub.add_parser("mcmc", parents=[common], help="antithetically coupled chains")
    p.add_argument("--model", choices=("probit", "pumps"), default="probit")
    p.add_argument("--data", default=None)
    p.add_argument("--coupling-d", type=int, default=2)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--antithetic-acceptance", action="store_true", default=False)
    p.add_argument("--proposal-sd", type=float, default=0.5)

    p = sub.add_parser("timing", parents=[common], help="sampler wall-clock study")
    p.add_argument("--constructions", type=_str_list, default=list(TIMED))
    p.add_argument("--d-range", type=_int_list, default=[5, 10, 20])
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=20)
    return parser


def _parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config must be a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"unknown config keys: {unknown}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# --------------------------------------------------------------------------- #
# output
# --------------------------------------------------------------------------- #


def _meta(args: argparse.Namespace) -> dict:
    eff = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config", "threads", "format")}
    digest = hashlib.sha256(json.dumps(eff, sort_keys=True, default=str).encode()).hexdigest()[:12]
    return {"tool": "segsample", "version": __version__, "seed": args.seed, "config": digest, "command": args.command}


def _header(meta: dict) -> str:
    return f"# segsample {meta['version']} seed={meta['seed']} config={meta['config']}"


def _write(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict) -> None:
    _write(args, json.dumps({"meta": _meta(args), **payload}, indent=1, default=_jsonable) + "\n")


def _emit_rows(args, rows: list[dict], default: str = "csv") -> None:
    fmt = args.format or default
    if fmt == "json":
        _emit_json(args, {"rows": rows})
        return
    buf = io.StringIO()
    buf.write(_header(_meta(args)) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    _write(args, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


# --------------------------------------------------------------------------- #
# commands
# --------------------------------------------------------------------------- #


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise _Usage(f"{args.command}: missing " + ", ".join("--" + m.replace("_", "-") for m in missing))


class _Usage(Exception):
    pass


def _construction(args) -> Construction:
    if args.segments:
        return Construction("custom", load_segment_set(args.segments).d, path=args.segments)
    _require(args, "construction", "d")
    base = None
    if args.base:
        base = Construction(args.base, args.d, offsets=(1,) if args.base == "ccv" else None)
    kind = args.construction
    return Construction(
        kind,
        args.d,
        b=args.b,
        offsets=tuple(args.offsets) if args.offsets else None,
        T=args.T if args.T is not None else (1 if kind == "ilh" else None),
        exchangeable=args.exchangeable,
        base=base,
    )


def cmd_validate(args) -> int:
    _require(args, "segments")
    rep = uniformity_residuals(load_segment_set(args.segments))
    _emit_json(args, {"report": rep.to_dict()})
    return 0 if rep.is_uniform(args.tol) else 1


def cmd_solve(args) -> int:
    if args.kind == "circulant":
        _require(args, "d", "offsets")
        con = Construction("ccv", args.d, offsets=tuple(args.offsets))
        S = con.segment_set()
        extra = {"objective": None}
    else:
        _require(args, "segments")
        problem = UniformityProblem.from_segments(load_segment_set(args.segments), args.kind == "ctm")
        res = solve_strict_ctm(problem) if args.kind == "ctm" else solve_standard_uniform(problem)
        S = res.segments
        extra = {"objective": res.objective, "grad_norm": res.grad_norm, "iterations": res.iterations}
    S = canonicalize(S)
    rep = uniformity_residuals(S)
    _emit_json(args, {**S.to_dict(), **extra, "max_coordinate_residual": rep.max_residual()})
    return 0


def _sample_matrix(args, con: Construction, n: int, rng) -> np.ndarray:
    if con.kind == "custom":
        S = con.segment_set()
        if (args.v_model or "common") == "iid":
            return draw_generalized(S, iid_source(S.d), n, rng).samples
        return draw(S, n, rng).samples
    return con.sample(n, rng)


def cmd_sample(args) -> int:
    con = _construction(args)
    U = _sample_matrix(args, con, args.n, make_rng(args.seed, 0, "sample"))
    if (args.format or "csv") == "json":
        _emit_json(args, {"construction": con.to_dict(), "samples": U})
        return 0
    buf = io.StringIO()
    buf.write(_header(_meta(args)) + "\n")
    buf.write(",".join(f"u{l + 1}" for l in range(U.shape[1])) + "\n")
    np.savetxt(buf, U, delimiter=",", fmt="%.17g")
    _write(args, buf.getvalue())
    return 0


def cmd_measure(args) -> int:
    con = _construction(args)
    if args.method == "exact":
        if con.kind == "custom":
            rep = exact_report(con.segment_set(), args.v_model or "common")
        else:
            rep = construction_report(con)
    else:
        rep = empirical_report(lambda n, rng: _sample_matrix(args, con, n, rng), con.d, args.n, args.seed)
    _emit_json(args, {"construction": con.to_dict(), "report": rep.to_dict()})
    return 0


def cmd_integrate(args) -> int:
    cfg = IntegrationConfig(
        integrand=args.integrand,
        a=args.a,
        tau=args.tau,
        p=args.p,
        n_points=list(args.n_points),
        replications=args.reps,
        schemes=list(args.schemes),
        point_file=args.point_file,
        seed=args.seed,
    )
    _emit_rows(args, [asdict(r) for r in mc_integrate(cfg)])
    return 0


def cmd_clt(args) -> int:
    rows = clt_check(CLT_INTEGRANDS[args.integrand], args.d_list, args.reps, args.base, args.seed)
    _emit_rows(args, [asdict(r) for r in rows])
    return 0


def cmd_mcmc(args) -> int:
    cfg = McmcConfig(
        model=args.model,
        data=args.data,
        d=args.coupling_d,
        iterations=args.iterations,
        burn_in=args.burn_in,
        replications=args.reps,
        antithetic_acceptance=args.antithetic_acceptance,
        proposal_sd=args.proposal_sd,
        seed=args.seed,
    )
    _emit_rows(args, run_mcmc(cfg).rows())
    return 0


def cmd_timing(args) -> int:
    rows = sampling_time_study(args.constructions, args.d_range, args.n, args.reps, args.seed)
    _emit_rows(args, [asdict(r) for r in rows])
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "sample": cmd_sample,
    "measure": cmd_measure,
    "integrate": cmd_integrate,
    "clt": cmd_clt,
    "mcmc": cmd_mcmc,
    "timing": cmd_timing,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        build_parser().print_usage(sys.stderr)
        return 2
    except (SegsampleError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


run = main
