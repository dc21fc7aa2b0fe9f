"""
Artifact repository: JSON, JSON-lines and CSV files written atomically
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from slitforge.core.errors import DomainError
from slitforge.core.numeric import Enclosure
from slitforge.models.enums import Region
from slitforge.models.params import ParamPack
from slitforge.models.records import NonergodicCertificate, TreeNode
from slitforge.models.spec import parse_lambda_spec
from slitforge.models.vectors import HolVec, TwistWitness
from slitforge.services.tree_builder import LevelReport, SlitTree, schedule

# Configure logging
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TREE_FORMAT = "slitforge.tree/1"


def _dumps(data: Any) -> str:
    return json.dumps(data, ensure_ascii=False, sort_keys=True, default=str)


def _write_atomic(path: PathLike, text: str) -> Tuple[bool, Optional[str]]:
    """
    Write text to path through a temporary file in the same directory.

    Returns:
        Tuple of (success: bool, error_message: Optional[str])
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.info(f"Wrote {path}")
        return True, None
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        return False, f"File error: {str(e)}"


def write_json(path: PathLike, data: Any) -> Tuple[bool, Optional[str]]:
    """Write one JSON document."""
    return _write_atomic(path, json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True, default=str) + "\n")


def write_jsonl(path: PathLike, rows: Iterable[Any]) -> Tuple[bool, Optional[str]]:
    """Write one JSON document per line."""
    return _write_atomic(path, "".join(_dumps(row) + "\n" for row in rows))


def write_csv(
    path: PathLike,
    rows: Sequence[Dict[str, Any]],
    fieldnames: Optional[List[str]] = None,
) -> Tuple[bool, Optional[str]]:
    """
    Write dict rows as CSV.

    Args:
        path: Target file
        rows: Rows sharing the same keys
        fieldnames: Column order (defaults to the keys of the first row)

    Returns:
        Tuple of (success: bool, error_message: Optional[str])
    """
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: ("" if row.get(key) is None else row.get(key)) for key in fieldnames})
    return _write_atomic(path, buffer.getvalue())


def read_json(path: PathLike) -> Any:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def read_jsonl(path: PathLike) -> List[Any]:
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


# --- Slit trees ---------------------------------------------------------------------------


def tree_lines(tree: SlitTree) -> List[str]:
    """JSON-lines form of a tree: a header, one line per slit, one line per level report."""
    header = {
        "type": "header",
        "format": TREE_FORMAT,
        "lambda": tree.spec.to_text(),
        "pack": tree.pack.model_dump(),
        "level_max": tree.schedule.level_max,
        "k_max": tree.schedule.k_max,
        "depth": tree.depth,
    }
    lines = [_dumps(header)]
    lines.extend(_dumps({"type": "node", **node.to_dict()}) for node in tree.nodes())
    lines.extend(_dumps({"type": "report", **report.to_dict()}) for report in tree.reports)
    return lines


def save_tree(path: PathLike, tree: SlitTree) -> Tuple[bool, Optional[str]]:
    """Write a tree as JSON lines."""
    return _write_atomic(path, "".join(line + "\n" for line in tree_lines(tree)))


def _node(data: Dict) -> TreeNode:
    twist = None
    if data.get("v") is not None:
        v = HolVec.loop(int(data["v"]["p"]), int(data["v"]["q"]))
        twist = TwistWitness(v=v, b=int(data["b"]), side=data.get("side") or "positive")
    cross = Enclosure(**data["cross_enclosure"]) if data.get("cross_enclosure") else None
    return TreeNode(
        level=int(data["level"]),
        index=int(data["index"]),
        slit=HolVec.slit(int(data["slit"]["m"]), int(data["slit"]["n"])),
        parent=data["parent"],
        twist=twist,
        region=Region(data["region"]),
        cross=cross,
    )


def _report(data: Dict) -> LevelReport:
    return LevelReport(
        j=int(data["j"]),
        region=Region(data["region"]),
        k=int(data["k"]),
        delta=data["delta"],
        rho=data["rho"],
        parents=int(data["parents"]),
        children=int(data["children"]),
        failures=list(data["failures"]),
        capped=list(data["capped"]),
        flags=list(data["flags"]),
    )


def load_tree(path: PathLike) -> SlitTree:
    """
    Read a tree written by save_tree. The schedule is recomputed from the
    header and the stored w₀.

    Raises:
        DomainError: not a tree file
    """
    records = read_jsonl(path)
    if not records or records[0].get("type") != "header" or records[0].get("format") != TREE_FORMAT:
        raise DomainError(f"{path} is not a slit tree file", "artifact_repo.tree")
    header = records[0]
    spec = parse_lambda_spec(header["lambda"])
    pack = ParamPack.model_validate(header["pack"])
    levels: List[List[TreeNode]] = [[] for _ in range(int(header["depth"]) + 1)]
    reports: List[LevelReport] = []
    for record in records[1:]:
        kind = record.pop("type")
        if kind == "node":
            node = _node(record)
            levels[node.level].append(node)
        elif kind == "report":
            reports.append(_report(record))
    if not levels[0]:
        raise DomainError(f"{path} has no root slit", "artifact_repo.tree")
    sched = schedule(pack, spec, int(header["level_max"]), w0=levels[0][0].slit, k_max=int(header["k_max"]))
    logger.info(f"Loaded tree of depth {len(levels) - 1} from {path}")
    return SlitTree(spec=spec, pack=pack, schedule=sched, levels=levels, reports=reports)


# --- Run directories ------------------------------------------------------------------------------


def collect_run(run_dir: PathLike) -> Dict[str, Any]:
    """Summary of a run directory: parsed JSON documents, JSON-lines and CSV row counts."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise DomainError(f"{run_dir} is not a directory", "artifact_repo.report")
    summary: Dict[str, Any] = {"run_dir": str(run_dir), "json": {}, "jsonl": {}, "csv": {}}
    for path in sorted(run_dir.iterdir()):
        if path.name.startswith("."):
            continue
        if path.suffix == ".json":
            summary["json"][path.stem] = read_json(path)
        elif path.suffix == ".jsonl":
            summary["jsonl"][path.stem] = {"lines": len(read_jsonl(path))}
        elif path.suffix == ".csv":
            rows = read_csv(path)
            summary["csv"][path.stem] = {"rows": len(rows), "columns": list(rows[0].keys()) if rows else []}
    return summary


def load_certificate(path: PathLike) -> NonergodicCertificate:
    """
    Read a certificate: {"entries": [{"slit": {m, n}, "loop": {p, q}}, ...]}.

    Raises:
        DomainError: malformed entries
    """
    data = read_json(path)
    try:
        entries = data["entries"]
        slits = [HolVec.from_dict(entry["slit"]) for entry in entries]
        loops = [HolVec.from_dict(entry["loop"]) for entry in entries if "loop" in entry]
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"{path} is not a certificate: {e}", "artifact_repo.certificate")
    return NonergodicCertificate(slits=slits, loops=loops)
