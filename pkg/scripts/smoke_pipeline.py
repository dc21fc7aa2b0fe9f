#!/usr/bin/env python3
"""
Slitforge Smoke Pipeline Script

Runs the relaxed-mode pipeline end to end on a toy parameter pack:
build -> verify -> nesting/gaps -> local dimensions -> Σδ_j, and writes
every artifact plus a result summary.

Usage:
    python scripts/smoke_pipeline.py [--lambda SPEC] [--depth 4] [--out artifacts/smoke]

Environment Variables:
    - SLITFORGE_PRECISION_BITS: starting interval precision
    - SLITFORGE_DIGIT_BUDGET: largest slit height in decimal digits
"""

import argparse
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

# Add the project root to the Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from slitforge.core.errors import SlitforgeError, exit_code_for
from slitforge.models.enums import Mode
from slitforge.models.params import derive_params
from slitforge.models.spec import parse_lambda_spec
from slitforge.repos.artifact_repo import save_tree, write_csv, write_json
from slitforge.services.cantor_dim import check_nesting_gaps, sum_delta, tree_dimension
from slitforge.services.tree_builder import build_tree, verify_tree

# λ with one large partial quotient a_7: q_7 > q_6^N, so k₀ = 6
TOY_LAMBDA = "cf:[0;2,2,2,2,2,2,100000000,2,2,2,2,2,2,2,2,2,2,2,2,2,2,2,2,2]"
TOY_OVERRIDES = {
    "r": "3/2",
    "M_prime": "2",
    "N": "2",
    "N_prime": "4",
    "rho": "2",
    "c0": "1",
    "delta": "1/100",
    "k0": "6",
}


class SmokeRunner:
    """Runs the pipeline steps and records their outcomes"""

    def __init__(self, lambda_text: str, depth: int, out: str, max_nodes: int):
        self.lambda_text = lambda_text
        self.depth = depth
        self.out = Path(out)
        self.max_nodes = max_nodes
        self.out.mkdir(parents=True, exist_ok=True)
        self.logger = logging.getLogger("smoke_pipeline")
        self.results: Dict[str, Any] = {
            "status": "running",
            "start_time": datetime.now(timezone.utc).isoformat(),
            "lambda": lambda_text,
            "overrides": TOY_OVERRIDES,
            "steps": [],
            "assertions": [],
            "errors": [],
        }

    def log_step(self, step: str, status: str, details: str = "") -> None:
        self.results["steps"].append({"step": step, "status": status, "details": details})
        line = f"{step}: {details}" if details else step
        if status == "error":
            self.logger.error(f"FAIL: {line}")
        else:
            self.logger.info(line)

    def check(self, name: str, passed: bool, details: str = "") -> bool:
        self.results["assertions"].append({"name": name, "passed": bool(passed), "details": details})
        self.log_step(name, "success" if passed else "error", details)
        return bool(passed)

    def run(self) -> bool:
        started = time.monotonic()
        try:
            spec = parse_lambda_spec(self.lambda_text)
            pack = derive_params("1/10", Mode.RELAXED, TOY_OVERRIDES)
            self.log_step("Parameters", "info", f"r={pack.r}, M'={pack.M_prime}, N={pack.N}, N'={pack.N_prime}")

            tree = build_tree(spec, pack, self.depth, prune=True, max_nodes=self.max_nodes)
            save_tree(self.out / "tree.jsonl", tree)
            write_json(self.out / "schedule.json", tree.schedule.to_dict())
            regions = sorted({node.region.value for node in tree.nodes()})
            self.check("tree depth", tree.depth >= self.depth, f"built {tree.depth} of {self.depth}")
            self.log_step("Regions", "info", ", ".join(regions))

            verification = verify_tree(tree)
            write_json(self.out / "verify.json", verification)
            self.check("verify_tree", verification["all_pass"])

            nesting = check_nesting_gaps(tree)
            write_json(self.out / "nesting.json", nesting)
            self.check("nesting and gaps", nesting["all_pass"])

            dims = tree_dimension(tree)
            write_json(self.out / "dim.json", dims)
            write_csv(self.out / "dim_levels.csv", dims["levels"])
            self.check("d_j dual-path agreement", dims["all_agree"] is True)

            sums = sum_delta(tree.schedule)
            write_json(self.out / "sum_delta.json", sums)
            write_csv(self.out / "sum_delta.csv", sums["rows"])
            self.check("Σδ_j dominated", sums["all_dominated"] is True, sums["verdict"])
        except SlitforgeError as e:
            self.results["errors"].append(f"{type(e).__name__}: {e} (exit {exit_code_for(e)})")
            self.log_step("Pipeline error", "error", str(e))
        finally:
            self.results["duration_seconds"] = round(time.monotonic() - started, 3)
            self.results["end_time"] = datetime.now(timezone.utc).isoformat()

        failed: List[Dict] = [a for a in self.results["assertions"] if not a["passed"]]
        ok = not failed and not self.results["errors"]
        self.results["status"] = "pass" if ok else "fail"
        write_json(self.out / "smoke_pipeline_result.json", self.results)
        self.log_step("Results saved", "info", str(self.out / "smoke_pipeline_result.json"))
        return ok


def main() -> None:
    """Main entry point"""
    parser = argparse.ArgumentParser(description="Slitforge relaxed-mode smoke pipeline")
    parser.add_argument("--lambda", dest="lambda_text", default=TOY_LAMBDA, help="λ-spec with a large gap")
    parser.add_argument("--depth", type=int, default=4, help="Tree depth")
    parser.add_argument("--max-nodes", type=int, default=64, help="Slits kept per level")
    parser.add_argument("--out", default="artifacts/smoke", help="Artifact directory")
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    runner = SmokeRunner(args.lambda_text, args.depth, args.out, args.max_nodes)
    try:
        success = runner.run()
        sys.exit(0 if success else 1)
    except KeyboardInterrupt:
        runner.log_step("Smoke run interrupted", "error", "User interrupted")
        sys.exit(1)


if __name__ == "__main__":
    main()
