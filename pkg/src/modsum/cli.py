"""Command-line front end.

    modsum eval   --probdist 0.5
    modsum eval   --source p=1.0 x0=0.5 x1=0.5 y0=0.5 y1=0.5
    modsum sweep  [--points 99] [--with-theorem2] [--output bounds.csv]
    modsum search --probdist 0.5 --n 1
    modsum verify --probdist 0.5 --n 1

Exit codes: 0 success, 1 lemma violation (verify), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from . import __version__
from .bounds import (
    THEOREM2_D_GRID,
    THEOREM2_W_GRID,
    cut_set,
    default_p_grid,
    nw_extension,
    sweep,
    theorem1,
    theorem2,
)
from .model import BinaryMarkovSource, DomainError, joint_pmf, probdist_source
from .optim import DEFAULT_ENVELOPE_RESOLUTION, DEFAULT_GRID_1D
from .schemes import (
    DEFAULT_MAX_NODES,
    DEFAULT_MAX_SECONDS,
    Scheme,
    check_zero_error,
    constant_scheme,
    coupling_report,
    enumerate_schemes,
    min_sum_message_entropy,
)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
SOURCE_KEYS = ("p", "x0", "x1", "y0", "y1")
CSV_DIGITS = 6


class UsageError(Exception):
    """Bad flags or source specification (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    source: Optional[BinaryMarkovSource] = None
    probdist: bool = False
    p_grid: list[float] = field(default_factory=list)
    with_theorem2: bool = False
    n: int = 1
    resolution: int = DEFAULT_ENVELOPE_RESOLUTION
    d_grid: int = THEOREM2_D_GRID
    w_grid: int = THEOREM2_W_GRID
    tol: float = 1e-10
    max_nodes: int = DEFAULT_MAX_NODES
    max_seconds: float = DEFAULT_MAX_SECONDS
    output: Optional[str] = None
    fmt: str = "json"
    workers: int = 1
    inject_broken: bool = False


def parse_source_spec(tokens: Sequence[str]) -> BinaryMarkovSource:
    """Parse ``p=<v> x0=<v> x1=<v> y0=<v> y1=<v>`` (tokens may also be comma-separated)."""
    items = [t for tok in tokens for t in tok.replace(",", " ").split()]
    vals: dict[str, float] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or key not in SOURCE_KEYS:
            raise UsageError(f"bad source term {item!r}; expected one of {', '.join(k + '=<v>' for k in SOURCE_KEYS)}")
        if key in vals:
            raise UsageError(f"source parameter {key} given twice")
        try:
            vals[key] = float(raw)
        except ValueError:
            raise UsageError(f"source parameter {key}={raw!r} is not a number") from None
    missing = [k for k in SOURCE_KEYS if k not in vals]
    if missing:
        raise UsageError(f"source spec missing {', '.join(missing)}")
    for k in SOURCE_KEYS:
        if not 0.0 <= vals[k] <= 1.0:
            raise UsageError(f"source parameter {k}={vals[k]!r} must lie in [0, 1]")
    return BinaryMarkovSource.from_params(*(vals[k] for k in SOURCE_KEYS))


def workers_from_env() -> int:
    raw = os.environ.get("MODSUM_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"MODSUM_THREADS={raw!r} must be a positive integer")
    return n


def _fmt(x: float) -> str:
    s = f"{x:.{CSV_DIGITS}f}"
    return "0.000000" if s == "-0.000000" else s


def _clean(x: float) -> float:
    # no negative zeros in reports
    return 0.0 if x == 0 else x


def tidy(obj: Any) -> Any:
    """Plain JSON types throughout: numpy scalars unwrapped, tuples as lists, -0.0 as 0.0."""
    if isinstance(obj, dict):
        return {str(k): tidy(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [tidy(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float):
        return _clean(obj)
    return obj


def _source_json(cfg: RunConfig) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": "probdist" if cfg.probdist else "explicit"}
    out.update(cfg.source.params())
    return out


def _scheme_json(scheme: Optional[Scheme]) -> Optional[dict[str, Any]]:
    if scheme is None:
        return None
    b1, b2 = scheme.blocks()
    return {
        "n": scheme.n,
        "point_format": "[sequence index, z-sequence index]",
        "enc1_blocks": [[list(pt) for pt in blk] for blk in b1],
        "enc2_blocks": [[list(pt) for pt in blk] for blk in b2],
    }


# ---------------------------------------------------------------------------
# commands


def cmd_eval(cfg: RunConfig) -> tuple[dict[str, Any], int]:
    src = cfg.source
    cs = cut_set(src)
    nw = nw_extension(src, cfg.resolution)
    t1 = theorem1(src.p, tol=cfg.tol) if cfg.probdist else None
    t2 = theorem2(src, d_grid=cfg.d_grid, w_grid=cfg.w_grid, tol=cfg.tol)
    report = {
        "source": _source_json(cfg),
        "cut_set": cs.value,
        "nw_extension": nw.value,
        "theorem1": None if t1 is None else t1.value,
        "theorem2": _clean(t2.value),
        "witnesses": {
            "cut_set": cs.witness,
            "nw_extension": nw.witness,
            "theorem1": None if t1 is None else t1.witness,
            "theorem2": t2.witness,
        },
        "tolerances": {"bound_value": 1e-5, "witness_feasibility": 1e-7, "optimizer_tol": cfg.tol},
        "solver_settings": {
            "grid_1d": DEFAULT_GRID_1D,
            "envelope_resolution": cfg.resolution,
            "envelope_method": "lp",
            "theorem2_d_grid": cfg.d_grid,
            "theorem2_w_grid": cfg.w_grid,
        },
    }
    return report, EXIT_OK


def sweep_csv(rows, with_theorem2: bool) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["p", "cut_set", "nw_extension", "theorem1"] + (["theorem2"] if with_theorem2 else [])
    writer.writerow(header)
    for r in rows:
        vals = [r.p, r.cut_set, r.nw_extension, r.theorem1] + ([r.theorem2] if with_theorem2 else [])
        writer.writerow([_fmt(v) for v in vals])
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig) -> tuple[str, int]:
    rows = sweep(cfg.p_grid, cfg.with_theorem2, cfg.resolution, workers=cfg.workers)
    if cfg.fmt == "json":
        data = [{k: v for k, v in vars(r).items() if k != "theorem2" or cfg.with_theorem2} for r in rows]
        return json.dumps(tidy(data), indent=2) + "\n", EXIT_OK
    return sweep_csv(rows, cfg.with_theorem2), EXIT_OK


def cmd_search(cfg: RunConfig) -> tuple[dict[str, Any], int]:
    res = min_sum_message_entropy(cfg.source, cfg.n, cfg.max_nodes, cfg.max_seconds)
    t2 = theorem2(cfg.source, d_grid=cfg.d_grid, w_grid=cfg.w_grid, tol=cfg.tol).value
    found = math.isfinite(res.min_entropy_sum)
    # a budget too small to reach any complete scheme leaves nothing to report
    total = res.min_entropy_sum if found else None
    per_symbol = total / cfg.n if found else None
    report = {
        "source": _source_json(cfg),
        "n": cfg.n,
        "min_entropy_sum": total,
        "min_entropy_sum_per_symbol": per_symbol,
        "argmin_scheme": _scheme_json(res.argmin),
        "schemes_enumerated": res.schemes_enumerated,
        "search_nodes": res.nodes,
        "exhaustive": res.exhaustive,
        "theorem2_value": _clean(t2),
        "comparison": per_symbol - t2 if found else None,
    }
    return report, EXIT_OK


def broken_scheme(source: BinaryMarkovSource, n: int) -> Scheme:
    """One index per transmitter; not zero-error unless x xor y is constant."""
    return constant_scheme(joint_pmf(source, n), n)


def cmd_verify(cfg: RunConfig, extra_schemes: Sequence[Scheme] = ()) -> tuple[dict[str, Any], int]:
    en = enumerate_schemes(cfg.source, cfg.n, cfg.max_nodes, cfg.max_seconds)
    pmf = en.pmf
    counts = {"zero_error": 0, "lemma1": 0, "lemma2": 0, "lemma3": 0}
    checked = 0
    violations: list[dict[str, Any]] = []
    d_max = 0.0

    def check(scheme: Scheme, injected: bool) -> None:
        nonlocal checked, d_max
        checked += 1
        if not check_zero_error(scheme, pmf):
            violations.append({"injected": injected, "failed": ["zero_error"], "scheme": _scheme_json(scheme)})
            return
        counts["zero_error"] += 1
        rep = coupling_report(scheme, pmf, cfg.source)
        d_max = max(d_max, rep.d_avg)
        failed = []
        for name, ok in (("lemma1", rep.lemma1_holds), ("lemma2", rep.lemma2_holds), ("lemma3", rep.lemma3_holds)):
            if ok:
                counts[name] += 1
            else:
                failed.append(name)
        if failed:
            violations.append({
                "injected": injected,
                "failed": failed,
                "scheme": _scheme_json(scheme),
                "d_avg": rep.d_avg,
                "lemma1_lhs": rep.lemma1_lhs,
                "lemma1_rhs": rep.lemma1_rhs,
            })

    for scheme in en:
        check(scheme, False)
    extra = list(extra_schemes)
    if cfg.inject_broken:
        extra.append(broken_scheme(cfg.source, cfg.n))
    for scheme in extra:
        check(scheme, True)

    report = {
        "source": _source_json(cfg),
        "n": cfg.n,
        "schemes_checked": checked,
        "exhaustive": bool(en.exhaustive),
        "search_nodes": en.nodes,
        "passes": counts,
        "max_d_avg": d_max,
        "lemma3_bound": 2 * cfg.source.p * (1 - cfg.source.p),
        "violations": violations,
    }
    return report, (EXIT_VIOLATION if violations else EXIT_OK)


# ---------------------------------------------------------------------------
# argument handling


def _probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 <= v <= 1.0 or math.isnan(v):
        raise argparse.ArgumentTypeError(f"p={text} must lie in [0, 1]")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modsum", description="Zero-error modulo-two sum: converse bounds and scheme search.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_source(p: argparse.ArgumentParser) -> None:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--probdist", type=_probability, metavar="P",
                       help="the special source with P(Z=0)=P")
        g.add_argument("--source", nargs="+", metavar="K=V",
                       help="explicit source: p=<v> x0=<v> x1=<v> y0=<v> y1=<v>")

    def add_output(p: argparse.ArgumentParser, formats=("json",), default="json") -> None:
        p.add_argument("--output", "-o", metavar="PATH", help="write here instead of stdout")
        p.add_argument("--format", dest="fmt", choices=formats, default=default)

    def add_solver(p: argparse.ArgumentParser) -> None:
        p.add_argument("--resolution", type=_positive_int, default=DEFAULT_ENVELOPE_RESOLUTION,
                       help="envelope grid points per simplex axis (>= 32)")
        p.add_argument("--d-grid", type=_positive_int, default=THEOREM2_D_GRID)
        p.add_argument("--w-grid", type=_positive_int, default=THEOREM2_W_GRID)
        p.add_argument("--tol", type=_positive_float, default=1e-10)

    def add_budget(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n", type=int, choices=(1, 2), default=1, help="blocklength")
        p.add_argument("--max-nodes", type=_positive_int, default=DEFAULT_MAX_NODES)
        p.add_argument("--max-seconds", type=_positive_float, default=DEFAULT_MAX_SECONDS)

    p_eval = sub.add_parser("eval", help="evaluate all bounds for one source")
    add_source(p_eval)
    add_solver(p_eval)
    add_output(p_eval)

    p_sweep = sub.add_parser("sweep", help="bounds for the special source over a grid of p (CSV)")
    g = p_sweep.add_mutually_exclusive_group()
    g.add_argument("--points", type=_positive_int, default=99, help="grid 1/(k+1), ..., k/(k+1)")
    g.add_argument("--p", dest="p_values", type=_probability, nargs="+", metavar="P")
    p_sweep.add_argument("--with-theorem2", action="store_true")
    p_sweep.add_argument("--resolution", type=_positive_int, default=DEFAULT_ENVELOPE_RESOLUTION)
    add_output(p_sweep, ("csv", "json"), "csv")

    p_search = sub.add_parser("search", help="minimum H(M1)+H(M2) over zero-error schemes")
    add_source(p_search)
    add_budget(p_search)
    add_solver(p_search)
    add_output(p_search)

    p_verify = sub.add_parser("verify", help="check the coupling lemmas on every enumerated scheme")
    add_source(p_verify)
    add_budget(p_verify)
    add_output(p_verify)
    p_verify.add_argument("--inject-broken", action="store_true", help=argparse.SUPPRESS)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if getattr(args, "probdist", None) is not None:
        cfg.source = probdist_source(args.probdist)
        cfg.probdist = True
    elif getattr(args, "source", None):
        cfg.source = parse_source_spec(args.source)
    for name in ("resolution", "d_grid", "w_grid", "tol", "n", "max_nodes", "max_seconds", "output", "fmt"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if cfg.resolution < 32:
        raise UsageError("--resolution must be at least 32")
    if args.command == "sweep":
        grid = args.p_values if args.p_values else default_p_grid(args.points)
        for p in grid:
            if not 0.0 < p < 1.0:
                raise UsageError(f"sweep p={p!r} must lie strictly inside (0, 1)")
        cfg.p_grid = sorted(grid)
        cfg.with_theorem2 = args.with_theorem2
    cfg.inject_broken = getattr(args, "inject_broken", False)
    cfg.workers = workers_from_env()
    return cfg


def run(cfg: RunConfig) -> tuple[str, int]:
    if cfg.command == "sweep":
        return cmd_sweep(cfg)
    handler = {"eval": cmd_eval, "search": cmd_search, "verify": cmd_verify}[cfg.command]
    report, code = handler(cfg)
    return json.dumps(tidy(report), indent=2, allow_nan=False) + "\n", code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        text, code = run(cfg)
    except (UsageError, DomainError) as exc:
        print(f"modsum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.output:
        try:
            with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"modsum: error: cannot write {cfg.output}: {exc.strerror}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    return code


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
