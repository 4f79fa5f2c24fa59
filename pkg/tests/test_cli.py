import json
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from cvarselect.main import cli
from cvarselect.models.streetnet import StreetNetwork
from cvarselect.repositories.instance import instance_adapter


def invoke(*args: str):
    return CliRunner().invoke(cli, ["--log-level", "WARNING", *args])


def files(root: Path) -> dict[str, bytes]:
    return {
        str(path.relative_to(root)): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


def read_table(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


@pytest.fixture
def coverage_file(tmp_path) -> Path:
    result = invoke("gen-instance", "coverage", "--seed", "4", "--out", str(tmp_path / "inst"))
    assert result.exit_code == 0, result.output
    return tmp_path / "inst" / "instance.json"


def test_gen_city_is_reproducible(tmp_path):
    for name in ("a", "b"):
        result = invoke("gen-city", "--seed", "7", "--out", str(tmp_path / name))
        assert result.exit_code == 0, result.output
    assert files(tmp_path / "a") == files(tmp_path / "b")

    network = StreetNetwork.model_validate_json((tmp_path / "a" / "network.json").read_text())
    assert len(network.nodes) == 25


def test_gen_instance_round_trip(tmp_path, coverage_file):
    instance = instance_adapter.validate_json(coverage_file.read_text())
    assert instance.version == "coverage-instance-v1"
    assert instance.seed == 4
    assert len(instance.candidates) == 8

    result = invoke("gen-instance", "mod", "--seed", "1", "--out", str(tmp_path / "mod"))
    assert result.exit_code == 0, result.output
    mod = instance_adapter.validate_json((tmp_path / "mod" / "instance.json").read_text())
    assert mod.version == "mod-instance-v1"
    assert (mod.n_demands, mod.n_vehicles) == (4, 6)


def test_solve_writes_solution_and_certificate(tmp_path, coverage_file):
    args = ["solve", str(coverage_file), "--alpha", "0.5", "--exact", "--delta-step", "10"]
    for name in ("a", "b"):
        result = invoke(*args, "--out", str(tmp_path / name))
        assert result.exit_code == 0, result.output
    assert files(tmp_path / "a") == files(tmp_path / "b")

    document = json.loads((tmp_path / "a" / "solution.json").read_text())
    assert document["config"]["study"] == "solve"
    assert document["config"]["schema"] == "cvarselect-csv-v1"
    solution = document["result"]
    assert solution["exact"] is True
    assert solution["n_samples"] == 2**8
    assert solution["certificate"]["epsilon"] == 0.0
    assert len(solution["result"]["selected"]["members"]) == 4
    assert solution["certificate"]["optimum_upper_bound"] >= solution["result"]["h_value"]


def test_solve_sizes_samples_from_epsilon(tmp_path, coverage_file):
    result = invoke(
        "solve", str(coverage_file), "--alpha", "0.2", "--eps", "100", "--delta-conf", "0.1",
        "--delta-step", "30", "--out", str(tmp_path / "out"),
    )
    assert result.exit_code == 0, result.output
    solution = json.loads((tmp_path / "out" / "solution.json").read_text())["result"]
    # 330^2 / (2 * 100^2) * ln(20)
    assert solution["n_samples"] == 17
    assert solution["eval_bound"] >= solution["result"]["eval_count"] * 17


def test_config_errors_exit_2(tmp_path, coverage_file):
    result = invoke("solve", str(coverage_file), "--alpha", "0", "--out", str(tmp_path / "o"))
    assert result.exit_code == 2
    result = invoke("solve", str(tmp_path / "missing.json"), "--alpha", "0.5")
    assert result.exit_code == 2
    result = invoke(
        "solve", str(coverage_file), "--alpha", "0.5", "--gamma-cap", "1", "--delta-step", "2",
        "--out", str(tmp_path / "o"),
    )
    assert result.exit_code == 2
    assert not (tmp_path / "o").exists()


def test_instance_errors_exit_3(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"version": "coverage-instance-v1", "seed": 0}')
    result = invoke("solve", str(broken), "--alpha", "0.5", "--out", str(tmp_path / "o"))
    assert result.exit_code == 3
    assert not (tmp_path / "o").exists()

    broken.write_text("not json")
    assert invoke("solve", str(broken), "--alpha", "0.5").exit_code == 3


def test_guard_exits_4(tmp_path):
    result = invoke(
        "gen-instance", "coverage", "--candidates", "21", "--budget", "1",
        "--out", str(tmp_path / "big"),
    )
    assert result.exit_code == 0, result.output
    result = invoke(
        "solve", str(tmp_path / "big" / "instance.json"), "--alpha", "0.5", "--exact",
        "--out", str(tmp_path / "o"),
    )
    assert result.exit_code == 4


def test_mod_offline_is_reproducible(tmp_path):
    args = [
        "mod-offline", "--seed", "3", "--alpha-grid", "0.1,0.5,1", "--ns", "50",
        "--gamma-cap", "100", "--delta-step", "10",
    ]
    for name in ("a", "b"):
        result = invoke(*args, "--out", str(tmp_path / name))
        assert result.exit_code == 0, result.output
    first = files(tmp_path / "a")
    assert first == files(tmp_path / "b")
    assert {
        "h_vs_alpha.csv",
        "traces.csv",
        "utility_samples.csv",
        "additive_term.csv",
        "tradeoff.csv",
        "selections.csv",
        "efficiencies.csv",
        "instance.json",
    } <= set(first)
    assert first["h_vs_alpha.csv"].startswith(b"# config: ")

    h_vs_alpha = read_table(tmp_path / "a" / "h_vs_alpha.csv")
    assert list(h_vs_alpha["alpha"]) == [0.1, 0.5, 1.0]
    assert (h_vs_alpha["eval_work"] <= h_vs_alpha["eval_bound"]).all()
    assert "wall_s" not in h_vs_alpha.columns

    traces = read_table(tmp_path / "a" / "traces.csv")
    assert len(traces) == 3 * 11
    samples = read_table(tmp_path / "a" / "utility_samples.csv")
    assert len(samples) == 3 * 50

    additive = read_table(tmp_path / "a" / "additive_term.csv")
    expected = additive["k_f"] / (1 + additive["k_f"]) * 100 * (1 / additive["alpha"] - 1)
    assert (additive["additive_term"] - expected).abs().max() < 1e-9


def test_coverage_writes_listings_and_plot_data(tmp_path):
    result = invoke(
        "coverage", "--alpha-grid", "0.1,1", "--ns", "50", "--delta-step", "30",
        "--plot-data", "--timings", "--out", str(tmp_path / "out"),
    )
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    footprints = read_table(out / "footprints.csv")
    assert len(footprints) == 8
    assert footprints["success_prob"].between(0.0, 1.0).all()

    selections = read_table(out / "selections.csv")
    assert set(selections["solution"]) == {"alpha=0.1", "alpha=1", "expectation"}
    assert (selections.groupby("solution").size() == 4).all()

    assert "wall_s" in read_table(out / "h_vs_alpha.csv").columns
    dat = (out / "traces.dat").read_text().splitlines()
    assert dat[0].startswith("# config: ")
    assert "# alpha=0.1" in dat
    assert "# alpha=1" in dat


def test_exact_mode_needs_coverage(tmp_path):
    result = invoke("mod-offline", "--alpha-grid", "0.5", "--ns", "10", "--out", str(tmp_path / "o"))
    assert result.exit_code == 0, result.output
    result = invoke(
        "solve", str(tmp_path / "o" / "instance.json"), "--alpha", "0.5", "--exact",
        "--out", str(tmp_path / "s"),
    )
    assert result.exit_code == 2


def test_ota_compare_is_reproducible(tmp_path):
    args = [
        "ota-compare", "--scale", "3x2", "--trials", "1", "--gamma-trigger", "0.5",
        "--seed", "2",
    ]
    for name in ("a", "b"):
        result = invoke(*args, "--out", str(tmp_path / name))
        assert result.exit_code == 0, result.output
    first = files(tmp_path / "a")
    assert first == files(tmp_path / "b")

    runs = read_table(tmp_path / "a" / "ota_runs.csv")
    assert list(runs["mode"]) == ["offline", "ota-street", "all-step"]
    assert runs.loc[runs["mode"] == "offline", "assignment_count"].item() == 1
    assert "runs/r3_n2/trial00_ota-street_g0.5.ndjson" in first
    assert "network.json" in first

    summary = read_table(tmp_path / "a" / "ota_summary.csv")
    assert len(summary) == 3
    assert (summary["runs"] == 1).all()


def test_ota_compare_rejects_bad_input(tmp_path):
    assert invoke("ota-compare", "--scale", "2x3", "--trials", "1").exit_code == 2
    assert invoke("ota-compare", "--scale", "three", "--trials", "1").exit_code == 2
    assert invoke("ota-compare", "--mode", "offline").exit_code == 2
