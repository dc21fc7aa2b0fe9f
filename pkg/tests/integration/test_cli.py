"""
Integration tests for the slitforge command line
"""

import pytest

from slitforge.cli.main import main
from slitforge.repos.artifact_repo import read_csv, read_json
from tests.fixtures.specs import GOLDEN, LARGE_GAP, TOY_OVERRIDES

pytestmark = pytest.mark.integration


def _overrides():
    args = []
    for key, value in TOY_OVERRIDES.items():
        args += ["--override", f"{key}={value}"]
    return args


class TestClassify:
    """classify command"""

    def test_golden(self, tmp_path):
        """Bounded quotients give a convergent PM trend"""
        assert main(["classify", "--lambda", GOLDEN, "--out", str(tmp_path)]) == 0
        result = read_json(tmp_path / "classify.json")
        assert result["verdict"].startswith("PM-convergent")
        assert result["trend_only"] is True
        assert set(result["ladder"]) == {"2", "4", "8", "16"}

    def test_rational(self, tmp_path):
        """Rational λ is decided outright"""
        assert main(["classify", "--lambda", "rational:3/7", "--out", str(tmp_path)]) == 0
        assert read_json(tmp_path / "classify.json")["verdict"] == "rational: NE countable"

    def test_bad_spec(self):
        """Unknown spec kind exits 2"""
        assert main(["classify", "--lambda", "bogus:[0;1]"]) == 2

    def test_missing_lambda(self):
        """--lambda is required"""
        assert main(["classify"]) == 2


class TestSmallCommands:
    """cf, zexp, cover and plan"""

    def test_cf(self, tmp_path):
        """q_10 of the golden mean is 89"""
        assert main(["cf", "--lambda", GOLDEN, "--K", "10", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "convergents.csv")
        assert len(rows) == 11
        assert rows[-1]["q"] == "89"

    def test_zexp(self, tmp_path):
        """θ = 2/5 ends at (2, 5)"""
        code = main(
            ["zexp", "--lambda", GOLDEN, "--theta", "2/5", "--Z", "V0", "--height", "10", "--out", str(tmp_path)]
        )
        assert code == 0
        result = read_json(tmp_path / "zexp.json")
        assert result["expansion"]["terminated"] is True
        assert [row["height"] for row in read_csv(tmp_path / "zexp.csv")] == ["1", "2", "5"]

    def test_cover(self, tmp_path):
        """Loop counts per band over [0, 1]"""
        code = main(
            [
                "cover", "--lambda", GOLDEN, "--Z", "V0", "--r", "2",
                "--band-start", "0", "--band-end", "3", "--out", str(tmp_path),
            ]
        )
        assert code == 0
        assert [row["count"] for row in read_csv(tmp_path / "cover.csv")] == ["2", "3", "14", "54"]
        assert read_json(tmp_path / "cover.json")["summable"] is True
        intervals = read_csv(tmp_path / "cover_intervals.csv")
        assert len(intervals) == 73
        assert intervals[0]["kind"] == "loop"
        assert (intervals[0]["x"], intervals[0]["height"], intervals[0]["slope_lo"]) == ("0", "1", "0")

    def test_plan_strict_override(self):
        """Strict mode refuses overrides"""
        assert main(["plan", "--lambda", GOLDEN, "--override", "r=3/2"]) == 2

    def test_plan_unknown_override(self):
        """Only the relaxed keys can be overridden"""
        assert main(["plan", "--lambda", GOLDEN, "--mode", "relaxed", "--override", "gamma=2"]) == 2

    def test_plan_toy(self, tmp_path):
        """Toy pack over the large gap"""
        code = main(
            ["plan", "--lambda", LARGE_GAP, "--mode", "relaxed", "--depth", "3", "--out", str(tmp_path)] + _overrides()
        )
        assert code == 0
        result = read_json(tmp_path / "plan.json")
        assert result["pack"]["provenance"] == "relaxed"
        assert result["schedule"]["w0_height"] == 30
        assert [row["region"] for row in read_csv(tmp_path / "plan.csv")][0] == "liouville"

    def test_verify_needs_tree(self):
        """verify without --tree or --out"""
        assert main(["verify"]) == 2


@pytest.mark.slow
class TestPipeline:
    """build → verify → dim → report on the toy pack"""

    def test_pipeline(self, tmp_path):
        """Every step exits 0 and leaves its artifact"""
        out = str(tmp_path)
        base = ["--lambda", LARGE_GAP, "--mode", "relaxed", "--depth", "1", "--out", out] + _overrides()
        assert main(["build"] + base) == 0
        assert (tmp_path / "tree.jsonl").exists()
        assert read_json(tmp_path / "build.json")["level_sizes"][0] == 1
        assert main(["verify", "--out", out]) == 0
        assert "all_pass" in read_json(tmp_path / "verify.json")
        assert main(["dim", "--out", out]) == 0
        assert "sum_delta" in read_json(tmp_path / "dim.json")
        assert main(["report", "--out", out]) == 0
        assert {"build", "verify", "dim"} <= set(read_json(tmp_path / "report.json")["json"])
