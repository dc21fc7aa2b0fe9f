"""
Command-line front end: classify, cf, zexp, plan, build, verify, dim, cover, report
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from mpmath import iv
from pydantic import ValidationError

from slitforge.core.config import settings
from slitforge.core.errors import DomainError, SlitforgeError, TruncationError, exit_code_for
from slitforge.models.enums import Mode, ZKind
from slitforge.models.params import RunConfig, parse_overrides
from slitforge.models.records import ZSetDescriptor
from slitforge.models.spec import PartialQuotientSpec, parse_lambda_spec
from slitforge.models.vectors import HolVec
from slitforge.repos import artifact_repo
from slitforge.services.cantor_dim import check_nesting_gaps, dim0_counting, group_bounds, sum_delta, tree_dimension
from slitforge.services.cf_core import as_stream, convergents, gap_indices, perez_marco_partial_sum
from slitforge.services.tree_builder import build_tree, schedule, verify_tree
from slitforge.services.z_expansion import check_angle_bounds, classify_relative, cover_E_r, z_convergents

# Configure logging
logger = logging.getLogger(__name__)

N_LADDER = ("2", "4", "8", "16")
DEFAULT_K = 20


def _emit(result: Dict, out: Optional[str], name: str) -> None:
    """Print a result and, with --out, write it to <out>/<name>.json."""
    if out:
        ok, error = artifact_repo.write_json(Path(out) / f"{name}.json", result)
        if not ok:
            raise DomainError(error or f"cannot write {name}.json", "cli.output")
    print(json.dumps(result, ensure_ascii=False, indent=2, default=str))


def _csv(out: Optional[str], name: str, rows: List[Dict]) -> None:
    if out and rows:
        ok, error = artifact_repo.write_csv(Path(out) / f"{name}.csv", rows)
        if not ok:
            raise DomainError(error or f"cannot write {name}.csv", "cli.output")


def _config(args: argparse.Namespace) -> RunConfig:
    try:
        return RunConfig(
            lambda_spec=args.lambda_spec,
            eps=args.eps,
            mode=Mode(args.mode),
            overrides=parse_overrides(args.override),
            depth=args.depth,
            out=args.out,
        )
    except ValidationError as e:
        raise DomainError(f"invalid run configuration: {e}", "cli.config")


def _spec(args: argparse.Namespace) -> PartialQuotientSpec:
    if not args.lambda_spec:
        raise DomainError("--lambda is required", "cli.lambda")
    return parse_lambda_spec(args.lambda_spec)


def _members(text: str) -> ZSetDescriptor:
    return ZSetDescriptor(members=ZKind(text))


def _direction(text: str):
    """A rational p/q or a λ-spec for the direction θ."""
    if ":" in text or text.startswith("{"):
        return parse_lambda_spec(text)
    return Fraction(text)


def _largest_pm_index(spec: PartialQuotientSpec, K: int):
    try:
        return perez_marco_partial_sum(spec, K)
    except TruncationError as e:
        logger.warning(f"PM sum truncated at {e.max_index}: {e}")
        return perez_marco_partial_sum(spec, max(e.max_index or 0, 0))


def _gaps(spec: PartialQuotientSpec, N: str, K: int):
    try:
        return gap_indices(spec, N, K)
    except TruncationError as e:
        return gap_indices(spec, N, max(e.max_index or 0, 0))


# --- Commands -----------------------------------------------------------------------------


def cmd_classify(args: argparse.Namespace) -> Dict:
    """
    PM partial sums, gap exponents and ℓ_N membership over a ladder of N, with
    a depth-limited verdict.
    """
    spec = _spec(args)
    K = args.K
    stream = as_stream(spec)
    stream.ensure(K + 1)
    if stream.terminal:
        result = {
            "lambda": spec.to_text(),
            "depth": stream.depth,
            "verdict": "rational: NE countable",
            "trend_only": False,
        }
        _emit(result, args.out, "classify")
        return result
    pm = _largest_pm_index(spec, K)
    ladder = {N: _gaps(spec, N, K).to_dict() for N in N_LADDER}
    tail = [pm.terms[k] for k in sorted(pm.terms)[-3:]]
    with iv.workprec(settings.precision_bits):
        divergent = any((term.to_iv() >= 1) is True for term in tail)
    if divergent:
        verdict = "PM-divergent trend; predicted Hdim NE = 0 regime"
    else:
        verdict = "PM-convergent trend; predicted Hdim NE = 1/2 regime"
    result = {
        "lambda": spec.to_text(),
        "pm": pm.to_dict(),
        "ladder": ladder,
        "verdict": verdict,
        "trend_only": True,
    }
    _emit(result, args.out, "classify")
    return result


def cmd_cf(args: argparse.Namespace) -> Dict:
    spec = _spec(args)
    rows = [c.to_dict() for c in convergents(spec, args.K)]
    _csv(args.out, "convergents", rows)
    result = {"lambda": spec.to_text(), "convergents": rows}
    _emit(result, args.out, "cf")
    return result


def cmd_zexp(args: argparse.Namespace) -> Dict:
    spec = _spec(args)
    theta = _direction(args.theta)
    members = _members(args.Z)
    expansion = z_convergents(theta, members, args.height, spec)
    result = {
        "expansion": expansion.to_dict(),
        "angle_bounds": check_angle_bounds(expansion, spec),
        "classification": classify_relative(expansion, args.N),
    }
    _csv(args.out, "zexp", [{**rec.to_dict()["vector"], "height": rec.height, "hor": rec.hor.mid, "terminal": rec.terminal} for rec in expansion])
    _emit(result, args.out, "zexp")
    return result


def cmd_plan(args: argparse.Namespace) -> Dict:
    config = _config(args)
    spec, pack = config.spec(), config.params()
    sched = schedule(pack, spec, config.depth, seed=HolVec.slit(*config.seed), k_max=args.K)
    result = {"pack": pack.to_dict(), "schedule": sched.to_dict()}
    _csv(args.out, "plan", [plan.to_row() for plan in sched.plans])
    _emit(result, args.out, "plan")
    return result


def cmd_build(args: argparse.Namespace) -> Dict:
    config = _config(args)
    spec, pack = config.spec(), config.params()
    tree = build_tree(
        spec,
        pack,
        config.depth,
        seed=HolVec.slit(*config.seed),
        prune=args.prune,
        max_nodes=args.max_nodes,
        workers=args.workers,
        k_max=args.K,
    )
    if config.out:
        ok, error = artifact_repo.save_tree(Path(config.out) / "tree.jsonl", tree)
        if not ok:
            raise DomainError(error or "cannot write tree.jsonl", "cli.output")
    result = {
        "provenance": pack.provenance,
        "depth": tree.depth,
        "level_sizes": [len(level) for level in tree.levels],
        "reports": [report.to_dict() for report in tree.reports],
        "schedule": tree.schedule.to_dict(),
    }
    _emit(result, config.out, "build")
    return result


def _tree_path(args: argparse.Namespace) -> Path:
    if args.tree:
        return Path(args.tree)
    if args.out:
        return Path(args.out) / "tree.jsonl"
    raise DomainError("--tree or --out is required", "cli.tree")


def cmd_verify(args: argparse.Namespace) -> Dict:
    tree = artifact_repo.load_tree(_tree_path(args))
    result = {"tree": verify_tree(tree), "nesting": check_nesting_gaps(tree)}
    result["all_pass"] = result["tree"]["all_pass"] and result["nesting"]["all_pass"]
    _emit(result, args.out, "verify")
    return result


def cmd_dim(args: argparse.Namespace) -> Dict:
    tree = artifact_repo.load_tree(_tree_path(args))
    dims = tree_dimension(tree)
    deltas = sum_delta(tree.schedule)
    result: Dict[str, Any] = {"dimension": dims, "sum_delta": deltas}
    _csv(args.out, "dim_levels", dims["levels"])
    _csv(
        args.out,
        "sum_delta",
        [
            {"k": row["k"], "group": row["group"], "sum_hi": row["sum"]["hi"], "bound_lo": (row["bound"] or {}).get("lo"), "dominated": row["dominated"]}
            for row in deltas["rows"]
        ],
    )
    if args.certificate:
        certificate = artifact_repo.load_certificate(args.certificate)
        counting = dim0_counting(certificate, tree.spec, tree.pack.N, N0=args.N0)
        result["dim0"] = counting
        _csv(
            args.out,
            "j_k",
            [{"k": entry["k"], **row} for entry in counting["table"] for row in entry["J_k"]],
        )
    _emit(result, args.out, "dim")
    return result


def cmd_cover(args: argparse.Namespace) -> Dict:
    spec = _spec(args)
    table = cover_E_r(
        _members(args.Z),
        args.r,
        args.a,
        (args.band_start, args.band_end),
        args.s,
        spec,
        max_intervals=args.max_intervals,
    )
    _csv(args.out, "cover", [band.to_row() for band in table.bands])
    _csv(
        args.out,
        "cover_intervals",
        [interval.to_row() for interval in table.intervals],
    )
    result = table.to_dict()
    _emit(result, args.out, "cover")
    return result


def cmd_report(args: argparse.Namespace) -> Dict:
    if not args.out:
        raise DomainError("--out is required", "cli.report")
    summary = artifact_repo.collect_run(args.out)
    dims = summary["json"].get("dim", {}).get("dimension")
    if dims:
        rows = [
            {"j": row["j"], "d_j": (float(row["d_j_closed_lo"]) + float(row["d_j_closed_hi"])) / 2}
            for row in dims["levels"]
        ]
        _csv(args.out, "plot_d_j", rows)
    artifact_repo.write_json(Path(args.out) / "report.json", summary)
    print(json.dumps({"run_dir": summary["run_dir"], "files": sorted(summary["json"])}, indent=2))
    return summary


def cmd_bounds(args: argparse.Namespace) -> Dict:
    """Σδ_j group bounds straight from λ (log-domain beyond the materialized depth)."""
    config = _config(args)
    result = group_bounds(config.spec(), config.params(), args.K)
    _emit(result, args.out, "bounds")
    return result


COMMANDS: Dict[str, Callable[[argparse.Namespace], Dict]] = {
    "classify": cmd_classify,
    "cf": cmd_cf,
    "zexp": cmd_zexp,
    "plan": cmd_plan,
    "build": cmd_build,
    "verify": cmd_verify,
    "dim": cmd_dim,
    "cover": cmd_cover,
    "report": cmd_report,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slitforge", description="Nonergodic directions on slit tori")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lambda_spec", help="λ-spec, e.g. periodic:[0;(1)]")
    common.add_argument("--eps", default="1/10", help="target dimension defect ε")
    common.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.STRICT.value)
    common.add_argument("--depth", type=int, default=4, help="tree depth / level limit")
    common.add_argument("--out", help="output directory")
    common.add_argument("--override", action="append", help="relaxed-mode parameter override k=v")
    common.add_argument("--K", type=int, default=DEFAULT_K, help="continued-fraction depth")
    common.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("classify", parents=[common], help="PM sums and ℓ_N ladder")
    sub.add_parser("cf", parents=[common], help="convergents p_k/q_k")
    zexp = sub.add_parser("zexp", parents=[common], help="Z-expansion of a direction")
    zexp.add_argument("--theta", required=True, help="direction: p/q or a λ-spec")
    zexp.add_argument("--Z", default=ZKind.V0_V2.value, choices=[z.value for z in ZKind])
    zexp.add_argument("--height", type=int, default=100)
    zexp.add_argument("--N", default="2")
    sub.add_parser("plan", parents=[common], help="parameter pack and level schedule")
    build = sub.add_parser("build", parents=[common], help="build the slit tree")
    build.add_argument("--prune", action="store_true")
    build.add_argument("--max-nodes", dest="max_nodes", type=int)
    build.add_argument("--workers", type=int)
    for name in ("verify", "dim"):
        command = sub.add_parser(name, parents=[common], help=f"{name} a built tree")
        command.add_argument("--tree", help="tree JSON-lines file (defaults to <out>/tree.jsonl)")
        if name == "dim":
            command.add_argument("--certificate", help="certificate JSON for the J_k tables")
            command.add_argument("--N0", help="threshold on n_k for the count bound")
    cover = sub.add_parser("cover", parents=[common], help="cover of E'_r by direction intervals")
    cover.add_argument("--Z", default=ZKind.V0_V2.value, choices=[z.value for z in ZKind])
    cover.add_argument("--r", default="2")
    cover.add_argument("--s", default="7/10")
    cover.add_argument("--a", default="0")
    cover.add_argument("--band-start", dest="band_start", type=int, default=1)
    cover.add_argument("--band-end", dest="band_end", type=int, default=8)
    cover.add_argument(
        "--max-intervals",
        dest="max_intervals",
        type=int,
        help="I(v) rows written to cover_intervals.csv",
    )
    sub.add_parser("report", parents=[common], help="summarize a run directory")
    sub.add_parser("bounds", parents=[common], help="Σδ_j group bounds from λ")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        COMMANDS[args.command](args)
        return 0
    except SlitforgeError as e:
        logger.error(f"{args.command} failed: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
