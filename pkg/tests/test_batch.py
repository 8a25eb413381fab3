#!/usr/bin/env python3
"""
Tests for batch evaluation and result files
"""
import csv
import json
import logging
import os
import tempfile
from pathlib import Path

import pytest
from pydantic import ValidationError

from taskenv.config import ControllerConfig, Settings
from taskenv.errors import StructuralError
from taskenv.harness import BatchSpec, ResultRecord, read_results, run_batch, summarize

SPREAD = """
variant spread
  base reach
  count 5
  seed 3
  start x = uniform(0, 2)
"""

SAMPLE_BATCH = Path(__file__).resolve().parent.parent / "samples" / "batch.yaml"


def make_spec(document, tmp_path, name="results.jsonl", **fields):
    values = {"document": str(document), "output": str(tmp_path / name), **fields}
    return BatchSpec(**values)


def record(controller, seed, status="success", time=None, energy=None, cause=None):
    return ResultRecord(
        task="reach",
        controller=controller,
        seed=seed,
        status=status,
        cause=cause,
        time=time,
        energy_spent=energy,
    )


class TestBatchSpec:
    """Test cases for BatchSpec"""

    def test_load_resolves_paths(self, tmp_path):
        """Test that relative paths are taken from the spec's directory"""
        path = tmp_path / "batch.yaml"
        path.write_text(
            "document: counter.taskdl\ncontrollers: [constant]\noutput: out/r.jsonl\n",
            encoding="utf-8",
        )
        spec = BatchSpec.load(path)
        assert spec.document == str(tmp_path / "counter.taskdl")
        assert spec.output == str(tmp_path / "out" / "r.jsonl")
        assert spec.csv_path == tmp_path / "out" / "r.csv"
        assert spec.runs == 1

    def test_sample(self):
        """Test the batch spec shipped with the samples"""
        spec = BatchSpec.load(SAMPLE_BATCH)
        assert spec.document.endswith("driving.taskdl")
        assert spec.tasks == ["drive", "drive_by_5"]
        assert len(spec.controllers) == 3
        assert spec.runs == 3
        assert spec.sim == {"delta": 0.001}

    @pytest.mark.parametrize(
        "fields",
        [
            {"runs": 0},
            {"sim": {"delta": -1}},
            {"sim": {"colour": 1}},
            {"workers": 0},
            {"extra": True},
        ],
    )
    def test_invalid(self, fields):
        """Test rejected batch specs"""
        with pytest.raises(ValidationError):
            BatchSpec(document="x.taskdl", **fields)

    def test_load_rejects_non_mapping(self):
        """Test a spec file that is a list"""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
            f.write("- constant\n")
            temp_path = f.name

        try:
            with pytest.raises(ValueError, match="mapping"):
                BatchSpec.load(temp_path)
        finally:
            os.unlink(temp_path)


class TestRunBatch:
    """Test cases for run_batch"""

    def test_records_and_summary(self, counter_file, tmp_path):
        """Test one record per task, controller and seed"""
        spec = make_spec(
            counter_file(), tmp_path, controllers=["constant:1", "constant"], runs=2
        )
        result = run_batch(spec)
        assert [r.key for r in result.records] == [
            ("reach", "constant", 0),
            ("reach", "constant", 1),
            ("reach", "constant:1", 0),
            ("reach", "constant:1", 1),
        ]
        idle, _, full, _ = result.records
        assert idle.status == "failure"
        assert idle.cause == "deadline-exceeded"
        assert idle.energy_spent == 0.0
        assert idle.goals == [False]
        assert full.status == "success"
        assert full.cause is None
        assert full.time == 3.0
        assert full.energy_spent == 3.0
        assert full.goals == [True]

        slow, fast = result.summary
        assert (slow.controller, slow.success_rate) == ("constant", 0.0)
        assert slow.mean_time is None
        assert (fast.controller, fast.successes) == ("constant:1", 2)
        assert fast.mean_time == 3.0
        assert fast.mean_energy == 3.0

    def test_rerun_is_identical(self, counter_file, tmp_path):
        """Test that reruns write byte-identical files, with or without workers"""
        document = counter_file(SPREAD)
        fields = {
            "variant": "spread",
            "controllers": ["constant:1", "constant"],
            "runs": 2,
        }
        first = run_batch(make_spec(document, tmp_path, "a.jsonl", **fields))
        second = run_batch(make_spec(document, tmp_path, "b.jsonl", **fields))
        pooled = run_batch(
            make_spec(document, tmp_path, "c.jsonl", workers=2, **fields)
        )
        content = first.path.read_bytes()
        assert second.path.read_bytes() == content
        assert pooled.path.read_bytes() == content
        assert (tmp_path / "c.csv").read_bytes() == (tmp_path / "a.csv").read_bytes()

    def test_no_controllers(self, counter_file, tmp_path):
        """Test that an empty controller list writes only the header"""
        result = run_batch(make_spec(counter_file(), tmp_path))
        assert result.records == []
        lines = result.path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1
        header = json.loads(lines[0])
        assert header["type"] == "header"
        assert header["format"] == "taskenv-results"
        assert header["controllers"] == []
        with open(tmp_path / "results.csv", newline="", encoding="utf-8") as f:
            assert len(list(csv.reader(f))) == 1

    def test_variants(self, counter_file, tmp_path):
        """Test five variants with three seeds each"""
        spec = make_spec(
            counter_file(SPREAD),
            tmp_path,
            variant="spread",
            controllers=["constant:1"],
            runs=3,
        )
        result = run_batch(spec)
        assert len(result.records) == 15
        names = {r.task for r in result.records}
        assert names == {f"reach__spread_{i}" for i in range(5)}
        first = result.records[0]
        assert first.params["variant"] == "spread"
        assert 0 <= first.params["start_x"] <= 2
        assert len(result.summary) == 5

    def test_tasks_and_variants_together(self, counter_file, tmp_path):
        """Test that named tasks are kept next to the variants"""
        spec = make_spec(
            counter_file(SPREAD),
            tmp_path,
            tasks=["reach"],
            variant="spread",
            variant_count=2,
            controllers=["constant"],
        )
        tasks = [r.task for r in run_batch(spec).records]
        assert tasks == ["reach", "reach__spread_0", "reach__spread_1"]

    def test_aborted_runs_are_recorded(self, counter_file, tmp_path, caplog):
        """Test that a failing controller yields aborted records, not an exception"""
        spec = make_spec(counter_file(), tmp_path, controllers=["constant:x=1"], runs=2)
        with caplog.at_level(logging.WARNING):
            result = run_batch(spec)
        assert [r.cause for r in result.records] == ["aborted", "aborted"]
        assert all(r.status == "failure" for r in result.records)
        assert result.records[0].diagnostic.startswith("StructuralError")
        assert "aborted" in caplog.text
        (cell,) = result.summary
        assert cell.aborted == 2
        assert cell.mean_energy is None

    def test_raising_plugin_controller_is_recorded(self, counter_file, tmp_path):
        """Test that an arbitrary exception from a plugin aborts only its runs"""
        directory = tmp_path / "controllers"
        directory.mkdir()
        (directory / "flaky.py").write_text(
            "from taskenv.controllers import BaseController\n\n\n"
            "class FlakyController(BaseController):\n"
            '    name = "flaky"\n\n'
            "    def act(self, observation, elapsed, briefing):\n"
            '        return {"push": 1 / 0}\n',
            encoding="utf-8",
        )
        settings = Settings(controller_directory=str(directory))
        spec = make_spec(
            counter_file(), tmp_path, controllers=["constant", "flaky"], runs=2
        )
        result = run_batch(spec, settings)
        assert len(result.records) == 4
        assert result.path.exists()
        flaky = [r for r in result.records if r.controller == "flaky"]
        assert [r.cause for r in flaky] == ["aborted", "aborted"]
        assert all("division by zero" in r.diagnostic for r in flaky)
        steady = [r for r in result.records if r.controller == "constant"]
        assert all(r.cause != "aborted" for r in steady)
        assert [cell.aborted for cell in result.summary] == [0, 2]

    def test_presets(self, counter_file, tmp_path):
        """Test referring to a configured controller preset by label"""
        settings = Settings(
            controllers=[
                ControllerConfig(name="constant", label="full", config={"value": 1})
            ]
        )
        spec = make_spec(counter_file(), tmp_path, controllers=["full"])
        (only,) = run_batch(spec, settings).records
        assert only.controller == "full"
        assert only.status == "success"

    def test_controller_configs(self, counter_file, tmp_path):
        """Test controller entries given as configs"""
        entry = ControllerConfig(name="constant", label="full", config={"value": 1})
        spec = make_spec(counter_file(), tmp_path, controllers=[entry])
        (only,) = run_batch(spec).records
        assert only.controller == "full"

    def test_unknown_controller(self, counter_file, tmp_path):
        """Test that an unknown controller fails the whole batch"""
        spec = make_spec(counter_file(), tmp_path, controllers=["constant", "nope"])
        with pytest.raises(ValueError, match="nope"):
            run_batch(spec)
        assert not (tmp_path / "results.jsonl").exists()

    def test_duplicate_controllers(self, counter_file, tmp_path):
        """Test that controller ids must be unique"""
        spec = make_spec(counter_file(), tmp_path, controllers=["constant", "constant"])
        with pytest.raises(ValueError, match="unique"):
            run_batch(spec)

    def test_unknown_task(self, counter_file, tmp_path):
        """Test a batch naming a task the document lacks"""
        spec = make_spec(
            counter_file(), tmp_path, tasks=["nope"], controllers=["constant"]
        )
        with pytest.raises(StructuralError):
            run_batch(spec)


class TestResults:
    """Test cases for reading results and summarizing records"""

    def test_read_back(self, counter_file, tmp_path):
        """Test that the result file reproduces the records and summary"""
        spec = make_spec(
            counter_file(), tmp_path, controllers=["constant:1", "constant"]
        )
        result = run_batch(spec)
        records, summary = read_results(result.path)
        assert records == result.records
        assert summary == result.summary
        assert summarize(records) == summary

    def test_csv_mirror(self, counter_file, tmp_path):
        """Test the CSV columns of a success"""
        run_batch(make_spec(counter_file(), tmp_path, controllers=["constant:1"]))
        with open(tmp_path / "results.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert rows == [
            {
                "task": "reach",
                "controller": "constant:1",
                "seed": "0",
                "status": "success",
                "cause": "",
                "time": "3.0",
                "energy_spent": "3.0",
                "goals": "1",
                "params": "{}",
                "diagnostic": "",
            }
        ]

    def test_summarize(self):
        """Test cell aggregates from hand-made records"""
        records = [
            record("b", 0, time=2.0, energy=1.0),
            record("b", 1, time=4.0, energy=3.0),
            record("b", 2, status="failure", cause="deadline-exceeded", energy=5.0),
            record("a", 0, status="failure", cause="aborted"),
        ]
        first, second = summarize(records)
        assert (first.controller, first.runs, first.aborted, first.success_rate) == (
            "a",
            1,
            1,
            0.0,
        )
        assert first.mean_energy is None
        assert second.success_rate == pytest.approx(2 / 3)
        assert second.mean_time == 3.0
        assert second.mean_energy == 3.0
        assert summarize([]) == []


if __name__ == "__main__":
    pytest.main([__file__])
