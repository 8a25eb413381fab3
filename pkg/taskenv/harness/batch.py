#!/usr/bin/env python3
"""
Batch evaluation: every task against every controller over several seeds

Results are written as JSON lines (a header line, one line per record,
then one summary line per task/controller cell) with a CSV mirror of the
records. Summaries are recomputed from the records. Output depends only
on the batch spec, never on scheduling.
"""
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..config import ControllerConfig, Settings
from ..controllers import ControllerManager
from ..errors import StructuralError
from ..simulator import SimConfig, goal_flags, run
from ..taskdl import TaskDocument, load
from ..tasks.task import Task
from ..tasks.variants import expand_variants

logger = logging.getLogger(__name__)

RESULT_FORMAT = "taskenv-results"
RESULT_VERSION = 1
ABORTED = "aborted"

ControllerEntry = Union[str, ControllerConfig]


class BatchSpec(BaseModel):
    """What to run: document, tasks, controllers, seeds, and where to write"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    document: str = Field(description="Path of the .taskdl document")
    tasks: List[str] = Field(
        default_factory=list,
        description="Task names (empty with no variant: every task)",
    )
    variant: Optional[str] = Field(
        default=None, description="Variant spec name in the document"
    )
    variant_count: Optional[int] = Field(default=None, ge=1)
    variant_seed: Optional[int] = Field(default=None, ge=0)
    controllers: List[ControllerEntry] = Field(
        default_factory=list, description="Controller specs, preset labels or configs"
    )
    runs: int = Field(
        default=1, ge=1, description="Runs (seeds) per task/controller cell"
    )
    sim: Dict[str, Any] = Field(default_factory=dict, description="SimConfig overrides")
    output: str = Field(default="results.jsonl", description="JSON-lines result path")
    workers: Optional[int] = Field(default=None, ge=1)

    @field_validator("sim")
    @classmethod
    def _check_sim(cls, value: Dict[str, Any]) -> Dict[str, Any]:
        SimConfig(**{k: v for k, v in value.items() if v is not None})
        return value

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BatchSpec":
        """Read a YAML (or JSON) batch spec

        Relative paths are taken from the spec's directory.
        """
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ValueError(f"Batch spec {path} must hold a mapping")
        spec = cls(**data)
        base = path.parent
        return spec.model_copy(
            update={
                "document": str(base / spec.document),
                "output": str(base / spec.output),
            }
        )

    @property
    def csv_path(self) -> Path:
        return Path(self.output).with_suffix(".csv")


class ResultRecord(BaseModel):
    """Outcome of one run; (task, controller, seed) identifies it

    ``seed`` is the run index the run's random streams are derived from.
    ``time`` is the completion or failure time, ``goals`` the per-goal
    satisfaction flags in the final state.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    task: str
    params: Dict[str, Union[float, str]] = Field(default_factory=dict)
    controller: str
    seed: int
    status: str
    cause: Optional[str] = None
    time: Optional[float] = None
    energy_spent: Optional[float] = None
    goals: List[bool] = Field(default_factory=list)
    diagnostic: Optional[str] = None

    @property
    def key(self) -> Tuple[str, str, int]:
        return (self.task, self.controller, self.seed)


class CellSummary(BaseModel):
    """Aggregates of one task/controller cell"""

    model_config = ConfigDict(frozen=True)

    task: str
    controller: str
    runs: int
    successes: int
    aborted: int
    success_rate: float
    mean_time: Optional[float] = None
    mean_energy: Optional[float] = None


class BatchResult(NamedTuple):
    records: List[ResultRecord]
    summary: List[CellSummary]
    path: Path


CSV_COLUMNS = (
    "task",
    "controller",
    "seed",
    "status",
    "cause",
    "time",
    "energy_spent",
    "goals",
    "params",
    "diagnostic",
)


def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def summarize(records: Sequence[ResultRecord]) -> List[CellSummary]:
    """Per-cell success rate and mean resources, computed from records only

    ``mean_time`` averages the completion times of successful runs,
    ``mean_energy`` the energy spent by every run that was not aborted.
    """
    cells: Dict[Tuple[str, str], List[ResultRecord]] = {}
    for record in records:
        cells.setdefault((record.task, record.controller), []).append(record)
    summary = []
    for (task, controller), group in sorted(cells.items()):
        successes = [r for r in group if r.status == "success"]
        spent = [r.energy_spent for r in group if r.energy_spent is not None]
        summary.append(
            CellSummary(
                task=task,
                controller=controller,
                runs=len(group),
                successes=len(successes),
                aborted=sum(1 for r in group if r.cause == ABORTED),
                success_rate=len(successes) / len(group),
                mean_time=_mean([r.time for r in successes if r.time is not None]),
                mean_energy=_mean(spent),
            )
        )
    return summary


def _controller_id(entry: ControllerEntry) -> str:
    return entry if isinstance(entry, str) else entry.key


def _resolve_entry(entry: ControllerEntry, settings: Settings) -> ControllerEntry:
    if isinstance(entry, str):
        preset = settings.preset(entry)
        if preset is not None:
            return preset
    return entry


def _tasks(doc: TaskDocument, spec: BatchSpec) -> List[Task]:
    tasks = [doc.task(name) for name in spec.tasks]
    if spec.variant is not None:
        tasks.extend(
            expand_variants(
                doc, doc.variant(spec.variant), spec.variant_count, spec.variant_seed
            )
        )
    if not spec.tasks and spec.variant is None:
        tasks = list(doc.tasks)
    if not tasks:
        raise StructuralError("Batch selects no tasks")
    return tasks


def _params(task: Task) -> Dict[str, Union[float, str]]:
    return {key: value for key, value in sorted(task.tags.items())}


def _aborted(
    task: Task, controller_id: str, seed: int, error: Exception
) -> ResultRecord:
    return ResultRecord(
        task=task.name,
        params=_params(task),
        controller=controller_id,
        seed=seed,
        status="failure",
        cause=ABORTED,
        diagnostic=f"{type(error).__name__}: {error}",
    )


def _run_cell(
    doc: TaskDocument,
    task: Task,
    entry: ControllerEntry,
    controller_id: str,
    runs: int,
    cfg: SimConfig,
    controller_directory: str,
) -> List[ResultRecord]:
    """All seeds of one task/controller pair; failures never escape

    An exception from the controller or the run, of any type, becomes an
    aborted record for that seed.
    """
    manager = ControllerManager(controller_directory)
    manager.load_external_controllers()
    records = []
    try:
        controller = manager.create(entry)
    except Exception as e:
        return [_aborted(task, controller_id, seed, e) for seed in range(runs)]
    try:
        for seed in range(runs):
            try:
                history, status = run(doc, task, controller, cfg, seed)
            except Exception as e:
                logger.warning(
                    f"Run {seed} of {task.name} with {controller_id} aborted: {e}"
                )
                records.append(_aborted(task, controller_id, seed, e))
                continue
            energy = task.energy.variable
            records.append(
                ResultRecord(
                    task=task.name,
                    params=_params(task),
                    controller=controller_id,
                    seed=seed,
                    status=status.outcome.value,
                    cause=status.cause.value if status.cause else None,
                    time=status.time,
                    energy_spent=history.initial_state[energy]
                    - history.final_state[energy],
                    goals=list(goal_flags(task, history.final_state)),
                )
            )
    finally:
        try:
            controller.close()
        except Exception as e:
            logger.warning(f"Closing {controller_id} failed: {e}")
    logger.info(f"Finished {task.name} x {controller_id}: {runs} runs")
    return records


def _write_results(
    spec: BatchSpec, records: Sequence[ResultRecord], summary: Sequence[CellSummary]
) -> Path:
    path = Path(spec.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "type": "header",
        "format": RESULT_FORMAT,
        "version": RESULT_VERSION,
        "columns": list(CSV_COLUMNS),
        "runs": spec.runs,
        "controllers": [_controller_id(c) for c in spec.controllers],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for record in records:
            line = {"type": "record", **record.model_dump()}
            f.write(json.dumps(line, sort_keys=True) + "\n")
        for cell in summary:
            line = {"type": "summary", **cell.model_dump()}
            f.write(json.dumps(line, sort_keys=True) + "\n")

    with open(spec.csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            row = record.model_dump()
            writer.writerow(
                [
                    record.task,
                    record.controller,
                    record.seed,
                    record.status,
                    record.cause or "",
                    "" if record.time is None else repr(record.time),
                    "" if record.energy_spent is None else repr(record.energy_spent),
                    ";".join("1" if g else "0" for g in record.goals),
                    json.dumps(row["params"], sort_keys=True),
                    record.diagnostic or "",
                ]
            )
    return path


def read_results(
    path: Union[str, Path]
) -> Tuple[List[ResultRecord], List[CellSummary]]:
    """Parse a result file written by ``run_batch``"""
    records, summary = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            data = json.loads(line)
            kind = data.pop("type")
            if kind == "record":
                records.append(ResultRecord(**data))
            elif kind == "summary":
                summary.append(CellSummary(**data))
    return records, summary


def run_batch(spec: BatchSpec, settings: Optional[Settings] = None) -> BatchResult:
    """Run every (task, controller, seed) combination and write the results

    Args:
        spec: Batch spec; relative paths are taken as given
        settings: Presets, worker default and controller directory

    Returns:
        Sorted records, the per-cell summary and the result path

    Raises:
        TaskDLError: The document does not parse
        StructuralError: A task or variant reference does not resolve
        ValueError: A controller spec names no known controller
    """
    settings = settings or Settings()
    doc = load(spec.document)
    tasks = _tasks(doc, spec)
    cfg = SimConfig.from_document(doc, **spec.sim)
    entries = [
        (_resolve_entry(e, settings), _controller_id(e)) for e in spec.controllers
    ]

    manager = ControllerManager(settings.controller_directory)
    manager.load_external_controllers()
    for entry, _ in entries:
        manager.create(entry)

    ids = [cid for _, cid in entries]
    if len(set(ids)) != len(ids):
        raise ValueError("Controller ids in a batch must be unique")

    cells = [(task, entry, cid) for task in tasks for entry, cid in entries]
    logger.info(
        f"Batch: {len(tasks)} tasks x {len(entries)} controllers x {spec.runs} runs"
    )
    workers = spec.workers or settings.workers
    args = [
        (doc, task, entry, cid, spec.runs, cfg, settings.controller_directory)
        for task, entry, cid in cells
    ]
    if workers <= 1 or len(cells) < 2:
        parts = [_run_cell(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
            parts = list(pool.map(_run_cell, *zip(*args)))

    records = sorted((r for part in parts for r in part), key=lambda r: r.key)
    summary = summarize(records)
    path = _write_results(spec, records, summary)
    return BatchResult(records, summary, path)
