#!/usr/bin/env python3
"""
Shared fixtures: the driving sample and small hand-built worlds
"""
from pathlib import Path

import pytest

from taskenv.config import ConfigManager
from taskenv.taskdl import load, parse, parse_expression
from taskenv.world import AgentBody, Channel, Interval, TransitionRule, Variable, World

SAMPLES = Path(__file__).resolve().parent.parent / "samples"
DRIVING = SAMPLES / "driving.taskdl"

COUNTER_TEXT = """\
world counter
  var time = 0
  var energy = 5 in [0, 100]
  var x = 0 in [0, 100]
  var push = 0 in [0, 1]
  dyn time <- time + delta
  dyn energy <- energy - delta * push
  dyn x <- x + push

sim delta 1 seed 0

body pusher
  sensor x
  actuator push

task reach
  body pusher
  deadline 10
  energy energy > 0
  goal x >= 3
"""


@pytest.fixture
def driving_doc():
    """The driving sample document"""
    return load(str(DRIVING))


@pytest.fixture
def counter_doc():
    """Integer counter: x grows by the push command each one-second step"""
    return parse(COUNTER_TEXT, source="counter.taskdl")


@pytest.fixture
def counter_world():
    """Counter world built directly from the model types"""
    return World(
        name="counter",
        variables=(
            Variable("time"),
            Variable("energy", Interval.closed(0, 100)),
            Variable("x", Interval.closed(0, 100)),
            Variable("push", Interval.closed(0, 1)),
        ),
        dynamics=(
            TransitionRule("time", parse_expression("time + delta")),
            TransitionRule("energy", parse_expression("energy - delta * push")),
            TransitionRule("x", parse_expression("x + push")),
        ),
        initial_state={"time": 0, "energy": 5, "x": 0, "push": 0},
    )


@pytest.fixture
def pusher():
    return AgentBody("pusher", sensors=(Channel("x"),), actuators=(Channel("push"),))


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch, tmp_path):
    """Keep the repository's config.yaml and the user's config out of tests"""
    monkeypatch.setattr(
        ConfigManager, "DEFAULT_CONFIG_PATHS", [tmp_path / "config.yaml"]
    )
    for name in ConfigManager.ENV_MAPPINGS:
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def drift_doc():
    """Counter whose position also drifts randomly"""
    text = COUNTER_TEXT.replace("dyn x <- x + push", "dyn x <- x + push + gauss(0.5)")
    return parse(text, source="drift.taskdl")


@pytest.fixture
def counter_file(tmp_path):
    """Write the counter document, plus any extra lines, to a temporary file"""

    def write(extra=""):
        path = tmp_path / "counter.taskdl"
        path.write_text(COUNTER_TEXT + extra, encoding="utf-8")
        return path

    return write
