import json
import os

import pytest
from typer.testing import CliRunner

from shiftbench.cli import _script_path, app
from shiftbench.lab.super2 import LIOUVILLIAN_TOL

runner = CliRunner()


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_list_shows_every_experiment():
    result = runner.invoke(app, ["list"])
    assert result.exit_code == 0
    for name in ("scan-lr", "verify-lemma", "end-to-end", "bounds-table", "spt-swap", "verify-liouvillian"):
        assert name in result.output


def test_bounds_table_writes_csv_and_sidecar(workdir):
    out = workdir / "zoo.csv"
    result = runner.invoke(app, ["run", "bounds-table", "--output", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# shiftbench")
    assert lines[1] == "alpha,L,source,T_threshold"
    record = json.loads((workdir / "zoo.csv.run.json").read_text())
    assert record["experiment"] == "bounds-table"
    assert record["passed"] is True
    assert record["config_hash"] in lines[0]


def test_rerun_is_served_from_cache(workdir):
    args = ["run", "bounds-table", "--output", str(workdir / "zoo.csv")]
    assert runner.invoke(app, args).exit_code == 0
    again = runner.invoke(app, args)
    assert again.exit_code == 0
    assert "cache hit" in again.output
    forced = runner.invoke(app, args + ["--force"])
    assert forced.exit_code == 0
    assert "cache hit" not in forced.output


def test_oversized_ring_exits_with_resource_code():
    result = runner.invoke(app, ["run", "verify-lemma", "--n", "14"])
    assert result.exit_code == 3


def test_unknown_experiment_and_bad_set():
    assert runner.invoke(app, ["run", "no-such-thing"]).exit_code == 2
    assert runner.invoke(app, ["run", "bounds-table", "--set", "not a key"]).exit_code == 2
    assert runner.invoke(app, ["run", "verify-lemma", "--l", "2", "--n", "12"]).exit_code == 2


def test_verify_lemma_small_run(workdir):
    out = workdir / "lemma.csv"
    result = runner.invoke(
        app, ["run", "verify-lemma", "--samples", "2", "--set", "options.z_per_sample=2", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    assert out.read_text().splitlines()[1].startswith("sample,z,distance")


@pytest.mark.parametrize(
    "args",
    [
        ["spt-swap"],
        ["haar-projector", "--samples", "200"],
        ["verify-liouvillian", "--samples", "5"],
    ],
)
def test_small_experiments_pass(workdir, args):
    result = runner.invoke(app, ["run", *args, "-o", str(workdir / f"{args[0]}.out")])
    assert result.exit_code == 0, result.output



def test_superunitary_check_uses_liouvillian_tolerance(workdir):
    out = workdir / "liouvillian.csv"
    result = runner.invoke(app, ["run", "verify-liouvillian", "--samples", "20", "-o", str(out)])
    assert result.exit_code == 0, result.output
    record = json.loads((workdir / "liouvillian.csv.run.json").read_text())
    assert record["checks"]["superunitaries preserve (O|O')"] is True
    assert float(record["summary"]["worst"]["superunitary"]) <= LIOUVILLIAN_TOL

def test_json_format_override(workdir):
    out = workdir / "zoo.json"
    result = runner.invoke(app, ["run", "bounds-table", "--format", "json", "-o", str(out)])
    assert result.exit_code == 0
    record = json.loads(out.read_text())
    assert record["checks"]["critical alpha = 2 + 1/sqrt(2)"] is True


def test_config_defaults_roundtrip():
    assert runner.invoke(app, ["config", "set-default", "model.seed", "5"]).exit_code == 0
    shown = runner.invoke(app, ["config", "show"])
    assert "model.seed = 5" in shown.output
    assert runner.invoke(app, ["config", "clear-default", "model.seed"]).exit_code == 0
    assert "No defaults set." in runner.invoke(app, ["config", "show"]).output



def test_packaged_script_resolves():
    assert os.path.isfile(_script_path("acceptance.sh"))
    assert os.path.isfile(_script_path("utils/common.sh"))


def test_acceptance_dry_run_prints_command():
    result = runner.invoke(app, ["scripts", "acceptance", "--dry-run"])
    assert result.exit_code == 0, result.output
    assert "acceptance.sh" in result.output
