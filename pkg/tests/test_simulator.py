#!/usr/bin/env python3
"""
Tests for stepping, channels, runs and history export
"""
import csv
import importlib.util
import json
import math
import random
from dataclasses import replace
from pathlib import Path

import pytest

from taskenv.controllers import ConstantController
from taskenv.errors import DomainError, RunAborted
from taskenv.seeding import NoiseStreams
from taskenv.simulator import (
    ActuatorChannels,
    Briefing,
    Episode,
    FailureCause,
    History,
    SimConfig,
    check_status,
    quantize,
    run,
    sense,
    step,
)
from taskenv.taskdl import parse, parse_expression
from taskenv.tasks import Communication
from taskenv.world import AgentBody, Channel, TransitionRule, Variable, World


class Recorder:
    """Pushes a fixed command and keeps what it was shown"""

    def __init__(self, commands=None):
        self.commands = commands if commands is not None else {"push": 1.0}
        self.observations = []
        self.briefings = []
        self.times = []

    def reset(self, rng):
        self.observations.clear()
        self.briefings.clear()
        self.times.clear()

    def act(self, observation, elapsed, briefing):
        self.observations.append(dict(observation))
        self.briefings.append(briefing)
        self.times.append(elapsed)
        return dict(self.commands)


class Jitter:
    """Draws its command from the controller stream"""

    def reset(self, rng):
        self.rng = rng

    def act(self, observation, elapsed, briefing):
        return {"u": float(self.rng.uniform(0, 1))}


FUZZ_TEXT = """\
world fuzz
  var time = 0
  var energy = {energy} in [0, 1000]
  var a = {a}
  var b = {b}
  var u = 0 in [0, 1]
  dyn time <- time + delta
  dyn energy <- energy - delta * u
  dyn a <- a + delta * ({k1} * b - {k2} * u) + gauss({s1})
  dyn b <- b + delta * {k3} * a + uniform(0, {s2})

sim delta {delta} seed {seed}

body rover
  sensor a noise {s3} latency {lag}
  sensor b resolution {res}
  actuator u latency {lag}

task wander
  body rover
  deadline {deadline}
  energy energy > 0
  goal a > 1000
"""


def random_world(index):
    """A small noisy world drawn from ``index``"""
    rng = random.Random(index)
    text = FUZZ_TEXT.format(
        energy=rng.randint(1, 50),
        a=round(rng.uniform(0, 5), 3),
        b=round(rng.uniform(0, 5), 3),
        k1=round(rng.uniform(0, 1), 3),
        k2=round(rng.uniform(0, 1), 3),
        k3=round(rng.uniform(0, 1), 3),
        s1=round(rng.uniform(0, 0.5), 3),
        s2=round(rng.uniform(0, 0.5), 3),
        s3=round(rng.uniform(0, 0.5), 3),
        res=rng.choice([0, 0.1, 0.5]),
        lag=rng.randint(0, 3),
        delta=rng.choice([0.05, 0.1, 0.25]),
        seed=rng.randint(0, 2**31),
        deadline=rng.randint(1, 5),
    )
    return parse(text, source=f"fuzz{index}.taskdl")


def load_oracle():
    """The fine-step reference integrator from scripts/"""
    path = Path(__file__).resolve().parent.parent / "scripts" / "driving_oracle.py"
    spec = importlib.util.spec_from_file_location("driving_oracle", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def closed_form_time(power=10.0, mass=2.0, distance=8.0):
    """Continuous-time arrival for constant power and unlimited energy"""
    return (1.5 * distance / math.sqrt(2 * power / mass)) ** (2 / 3)


class TestStep:
    """Test cases for a single simulation step"""

    def test_commands_then_rules(self, counter_world):
        """Test that commands are written before the rules read the state"""
        post = step(counter_world, counter_world.initial_state, {"push": 1}, 1.0)
        assert post == {"time": 1.0, "energy": 4.0, "x": 1.0, "push": 1.0}

    def test_rules_are_synchronous(self):
        """Test that every rule reads the same pre-state"""
        world = World(
            "swap",
            (Variable("a"), Variable("b")),
            (
                TransitionRule("a", parse_expression("b")),
                TransitionRule("b", parse_expression("a")),
            ),
            {"a": 1, "b": 2},
        )
        assert step(world, world.initial_state, {}, 0.1) == {"a": 2.0, "b": 1.0}

    def test_after_phase_reads_first_result(self, counter_world):
        """Test that dynamics additions run over the updated state"""
        damped = counter_world.with_after(
            [TransitionRule("x", parse_expression("x * 0.5"))]
        )
        post = step(damped, damped.initial_state, {"push": 1}, 1.0)
        assert post["x"] == 0.5

    def test_unruled_variables_keep_their_value(self, counter_world):
        """Test that a variable without a rule is left alone"""
        state = {**counter_world.initial_state, "push": 1}
        assert step(counter_world, state, {}, 1.0)["push"] == 1

    def test_command_outside_domain(self, counter_world):
        """Test rejecting and clamping an out-of-domain command"""
        with pytest.raises(DomainError) as info:
            step(counter_world, counter_world.initial_state, {"push": 2}, 1.0)
        assert info.value.variable == "push"
        post = step(
            counter_world, counter_world.initial_state, {"push": 2}, 1.0, clamp=True
        )
        assert post["x"] == 1.0


class TestChannels:
    """Test cases for sensor and actuator channels"""

    @pytest.mark.parametrize(
        "value,resolution,expected",
        [
            (0.25, 0.5, 0.5),
            (-0.25, 0.5, -0.5),
            (0.24, 0.5, 0.0),
            (7.0, 2.0, 8.0),
            (1.3, 0.0, 1.3),
        ],
    )
    def test_quantize(self, value, resolution, expected):
        """Test rounding to the resolution with halves away from zero"""
        assert quantize(value, resolution) == pytest.approx(expected)

    def test_sensor_latency(self):
        """Test that a lagging sensor reads an older state"""
        body = AgentBody("b", sensors=(Channel("x", latency=2),))
        history = History(dt=1.0, states=[{"x": float(k)} for k in range(5)])
        assert sense(body, history, 4) == {"x": 2.0}
        assert sense(body, history, 1) == {"x": 0.0}

    def test_sensor_resolution(self):
        """Test quantized readings"""
        body = AgentBody("b", sensors=(Channel("x", resolution=0.5),))
        history = History(dt=1.0, states=[{"x": 1.3}])
        assert sense(body, history, 0) == {"x": 1.5}

    def test_sensor_noise_is_reproducible(self):
        """Test that noise depends only on seed and run index"""
        body = AgentBody("b", sensors=(Channel("x", noise_sigma=0.1),))
        history = History(dt=1.0, states=[{"x": 1.0}])
        first = sense(body, history, 0, NoiseStreams(4, 0))
        again = sense(body, history, 0, NoiseStreams(4, 0))
        other = sense(body, history, 0, NoiseStreams(4, 1))
        assert first == again
        assert first != other
        assert first["x"] != 1.0

    def test_actuator_latency(self, counter_world):
        """Test that commands arrive after the actuator latency"""
        body = AgentBody("b", actuators=(Channel("push", latency=2),))
        channels = ActuatorChannels(body, counter_world)
        streams = NoiseStreams()
        delivered = [
            channels.push(command, streams)
            for command in ({"push": 1}, {"push": 0}, {}, {}, {})
        ]
        assert delivered == [{}, {}, {"push": 1.0}, {"push": 0.0}, {}]

    def test_actuator_resolution_and_clip(self, counter_world):
        """Test that delivered values are quantized and kept in the domain"""
        body = AgentBody("b", actuators=(Channel("push", resolution=0.5),))
        channels = ActuatorChannels(body, counter_world)
        assert channels.push({"push": 0.8}, NoiseStreams()) == {"push": 1.0}


class TestRun:
    """Test cases for complete runs"""

    def test_reach(self, counter_doc):
        """Test a run that reaches its goal"""
        history, status = run(counter_doc, "reach", ConstantController({"value": 1}))
        assert status.is_success
        assert status.time == 3.0
        assert status.step == 3
        assert len(history) == 3
        assert [s["x"] for s in history.states] == [0.0, 1.0, 2.0, 3.0]
        assert history.final_state["energy"] == 2.0
        assert not history.horizon_reached

    def test_null_action_hits_deadline(self, counter_doc):
        """Test that doing nothing runs into the deadline"""
        _, status = run(counter_doc, "reach", ConstantController())
        assert status.cause == FailureCause.DEADLINE
        assert status.time == 10.0

    def test_energy_reported_first(self, counter_doc):
        """Test the energy check winning over the goal at the same state"""
        task = replace(counter_doc.task("reach"), start={"energy": 3})
        _, status = run(counter_doc, task, ConstantController({"value": 1}))
        assert status.cause == FailureCause.ENERGY
        assert status.time == 3.0

    def test_non_actuator_command_aborts(self, counter_doc):
        """Test that commanding a sensor-only variable aborts the run"""
        with pytest.raises(RunAborted):
            run(counter_doc, "reach", Recorder({"x": 1.0}))

    def test_out_of_domain_command(self, counter_doc):
        """Test the clamp_actuators switch"""
        with pytest.raises(DomainError):
            run(counter_doc, "reach", Recorder({"push": 2.0}))
        cfg = SimConfig(delta=1, clamp_actuators=True)
        _, status = run(counter_doc, "reach", Recorder({"push": 2.0}), cfg)
        assert status.time == 3.0

    def test_horizon(self, counter_doc):
        """Test a run cut short by the horizon"""
        cfg = SimConfig(delta=1, horizon=2)
        history, status = run(counter_doc, "reach", ConstantController(), cfg)
        assert status.cause == FailureCause.HORIZON
        assert status.time == 2.0
        assert history.horizon_reached
        assert check_status(counter_doc.task("reach"), history) == status

    def test_until_horizon(self, counter_doc):
        """Test continuing past the terminal status"""
        cfg = SimConfig(delta=1, horizon=6)
        history, status = run(counter_doc, "reach", Recorder(), cfg, until_horizon=True)
        assert status.is_success
        assert status.time == 3.0
        assert len(history.states) == 7
        assert history.horizon_reached
        assert "domain:energy" in history.violations[6]

    def test_violations_are_logged(self, counter_doc, caplog):
        """Test that leaving a domain is reported but not enforced"""
        cfg = SimConfig(delta=1, horizon=7)
        with caplog.at_level("WARNING", logger="taskenv.simulator.engine"):
            run(counter_doc, "reach", Recorder(), cfg, until_horizon=True)
        assert "domain:energy" in caplog.text

    def test_controller_sees_elapsed_time(self, counter_doc):
        """Test the controller's view of time"""
        recorder = Recorder()
        run(counter_doc, "reach", recorder)
        assert recorder.times == [0.0, 1.0, 2.0]
        assert recorder.observations == [{"x": 0.0}, {"x": 1.0}, {"x": 2.0}]

    def test_noisy_runs_are_reproducible(self, counter_doc):
        """Test that the run index picks the random streams"""
        task = replace(
            counter_doc.task("reach"),
            channels={"sensor:x": Channel("x", noise_sigma=0.5)},
        )

        def observed(run_index):
            recorder = Recorder()
            run(counter_doc, task, recorder, run_index=run_index)
            return list(recorder.observations)

        assert observed(0) == observed(0)
        assert observed(0) != observed(1)

    @pytest.mark.parametrize("index", range(100))
    def test_random_worlds_replay_exactly(self, index):
        """Test that a seeded run of a random world replays bit for bit"""
        doc = random_world(index)
        first = run(doc, "wander", Jitter(), run_index=index % 3)
        again = run(doc, "wander", Jitter(), run_index=index % 3)
        assert first.history.states == again.history.states
        assert first.history.commands == again.history.commands
        assert first.status == again.status

    def test_fork_is_independent(self, counter_doc):
        """Test that a forked episode does not touch the original"""
        task = counter_doc.task("reach")
        world, body = counter_doc.resolve(task)
        episode = Episode(world, body, task, SimConfig(delta=1))
        twin = episode.fork()
        twin.apply({"push": 1})
        assert twin.state["x"] == 1.0
        assert episode.state["x"] == 0.0
        assert len(episode.history.states) == 1


class TestBriefing:
    """Test cases for what the controller is told"""

    def test_full_description(self, driving_doc):
        """Test that full mode carries the task text"""
        recorder = Recorder({"power": 10.0})
        run(driving_doc, "drive", recorder)
        briefing = recorder.briefings[0]
        assert briefing.mode == Communication.FULL
        assert briefing.description.startswith("task drive")
        assert "goal energy > 0, position > 10" in briefing.description

    def test_hints(self, driving_doc):
        """Test that hints mode only carries the hints"""
        task = replace(driving_doc.task("drive"), communication=Communication.HINTS)
        recorder = Recorder({"power": 10.0})
        run(driving_doc, task, recorder)
        briefing = recorder.briefings[0]
        assert briefing.description is None
        assert briefing.hints == ("pass position 10 before the energy runs out",)

    def test_reinforcement_flags(self, counter_doc):
        """Test that reinforcement mode reports goal coverage"""
        task = replace(
            counter_doc.task("reach"), communication=Communication.REINFORCEMENT
        )
        recorder = Recorder()
        run(counter_doc, task, recorder)
        assert [b.flags for b in recorder.briefings] == [(False,), (False,), (False,)]
        assert recorder.briefings[0].to_dict()["mode"] == "incremental-reinforcement"

    def test_briefing_dict(self):
        """Test the briefing export"""
        briefing = Briefing(Communication.HINTS, hints=("go",))
        assert briefing.to_dict() == {
            "mode": "hints",
            "description": None,
            "hints": ["go"],
            "flags": [],
        }


class TestDriving:
    """Test cases for the driving sample against known figures"""

    def test_frugal_power(self, driving_doc):
        """Test constant low power: slow but within the energy budget"""
        cfg = SimConfig.from_document(driving_doc, delta=0.001)
        frugal = ConstantController({"value": 0.15})
        history, status = run(driving_doc, "drive", frugal, cfg)
        assert status.is_success
        assert status.time == pytest.approx(9.865, abs=0.01)
        assert history.final_state["energy"] == pytest.approx(8.52, abs=0.01)

    def test_full_power_runs_dry(self, driving_doc):
        """Test that full power exhausts the energy before the goal"""
        history, status = run(driving_doc, "drive", ConstantController({"value": 10}))
        assert status.cause == FailureCause.ENERGY
        assert status.time == pytest.approx(1.0, abs=0.02)
        assert history.final_state["position"] < 10

    def test_converges_to_closed_form(self, driving_doc):
        """Test that smaller steps approach the continuous arrival time"""
        task = replace(driving_doc.task("drive"), start={"energy": 100})
        expected = closed_form_time()
        errors = []
        for delta in (0.01, 0.001):
            cfg = SimConfig.from_document(driving_doc, delta=delta)
            _, status = run(driving_doc, task, ConstantController({"value": 10}), cfg)
            assert status.is_success
            errors.append(abs(status.time - expected))
        assert expected == pytest.approx(2.4327, abs=1e-3)
        assert errors[0] < 0.02
        assert errors[1] < errors[0]

    def test_frugal_arrival_converges(self, driving_doc):
        """Test that the low-power arrival time settles as the step shrinks"""
        times = []
        for delta in (0.1, 0.01, 0.001):
            cfg = SimConfig.from_document(driving_doc, delta=delta)
            _, status = run(
                driving_doc, "drive", ConstantController({"value": 0.15}), cfg
            )
            assert status.is_success
            times.append(status.time)
        assert abs(times[2] - times[1]) < abs(times[1] - times[0])
        assert times[2] == pytest.approx(9.865, abs=0.01)

    def test_agrees_with_reference_integrator(self, driving_doc):
        """Test the full-power run against the standalone integrator"""
        oracle = load_oracle()
        task = replace(driving_doc.task("drive"), start={"energy": 100})
        cfg = SimConfig.from_document(driving_doc, delta=0.0001)
        _, status = run(driving_doc, task, ConstantController({"value": 10}), cfg)
        same_step, _ = oracle.integrate(10.0, 0.0001)
        fine, _ = oracle.integrate(10.0, 1e-5)
        assert status.is_success
        assert status.time == pytest.approx(same_step, abs=2e-4)
        assert status.time == pytest.approx(fine, rel=1e-3)
        assert fine == pytest.approx(oracle.closed_form(10.0), rel=1e-3)


class TestHistoryExport:
    """Test cases for history files"""

    def test_jsonl(self, counter_doc, tmp_path):
        """Test one JSON object per step"""
        history, _ = run(counter_doc, "reach", ConstantController({"value": 1}))
        path = tmp_path / "run.jsonl"
        history.to_jsonl(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        records = [json.loads(line) for line in lines]
        assert len(records) == 3
        assert records[0]["step"] == 0
        assert records[0]["commands"] == {"push": 1.0}
        assert records[0]["pre"]["x"] == 0.0
        assert records[0]["post"]["x"] == 1.0
        assert records[2]["time"] == 2.0

    def test_csv(self, counter_doc, tmp_path):
        """Test one row per state with the command columns"""
        history, _ = run(counter_doc, "reach", ConstantController({"value": 1}))
        path = tmp_path / "run.csv"
        history.to_csv(path)
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0][:2] == ["step", "t"]
        assert rows[0][-2:] == ["cmd_push", "violations"]
        assert len(rows) == 5
        assert float(rows[1][-2]) == 1.0
        assert rows[4][-2] == ""

    def test_entries(self, counter_doc):
        """Test pre/post pairing of history entries"""
        history, _ = run(counter_doc, "reach", ConstantController({"value": 1}))
        entries = list(history.entries())
        assert [e.step for e in entries] == [0, 1, 2]
        assert entries[1].pre["x"] == 1.0
        assert entries[1].post["x"] == 2.0


if __name__ == "__main__":
    pytest.main([__file__])
