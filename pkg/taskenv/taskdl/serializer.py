#!/usr/bin/env python3
"""
Canonical taskdl text

Ordering is fixed (world, sim, bodies, tasks, variants; names and
variables sorted) and numbers use the shortest exact representation, so
``serialize(parse(serialize(doc))) == serialize(doc)``.
"""
import math
from typing import TYPE_CHECKING, Any, List, Optional, Union

from ..tasks.problems import (
    GOAL,
    AtomicProblem,
    Conjunction,
    Disjunction,
    Goal,
    Negation,
    Problem,
    SerialProblem,
)
from ..tasks.task import Task
from ..world import AgentBody, Channel, Interval, PartialState, World
from .expressions import format_number

if TYPE_CHECKING:
    from .document import TaskDocument

INDENT = "  "


def render_string(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_interval(interval: Interval) -> str:
    left = "[" if interval.lower_closed else "("
    right = "]" if interval.upper_closed else ")"
    return (
        f"{left}{format_number(interval.lower)}, {format_number(interval.upper)}{right}"
    )


def render_bound(name: str, interval: Interval) -> str:
    """One goal clause, using the comparison form for half-infinite bounds"""
    lower_inf = math.isinf(interval.lower)
    upper_inf = math.isinf(interval.upper)
    if lower_inf and not upper_inf:
        op = "<=" if interval.upper_closed else "<"
        return f"{name} {op} {format_number(interval.upper)}"
    if upper_inf and not lower_inf:
        op = ">=" if interval.lower_closed else ">"
        return f"{name} {op} {format_number(interval.lower)}"
    return f"{name} in {render_interval(interval)}"


def render_clauses(target: PartialState) -> str:
    return ", ".join(render_bound(n, i) for n, i in target.bounds.items())


def render_goal(goal: Goal) -> str:
    parts = ["goal" if goal.polarity == GOAL else "fail"]
    clauses = render_clauses(goal.target)
    if clauses:
        parts.append(clauses)
    if goal.hold > 0:
        parts.append(f"hold {format_number(goal.hold)}")
    if goal.window != (0.0, math.inf):
        parts.append(
            f"window {format_number(goal.window[0])} {format_number(goal.window[1])}"
        )
    return " ".join(parts)


def render_channel(kind: str, channel: Channel) -> str:
    text = f"{kind} {channel.variable}"
    if channel.noise_sigma:
        text += f" noise {format_number(channel.noise_sigma)}"
    if channel.resolution:
        text += f" resolution {format_number(channel.resolution)}"
    if channel.latency:
        text += f" latency {channel.latency}"
    return text


def render_distribution(dist: Any) -> str:
    """``3``, ``uniform(0, 4)`` or ``gauss(0, 0.1)``"""
    if dist.kind == "fixed":
        return format_number(dist.params[0])
    args = ", ".join(format_number(p) for p in dist.params)
    return f"{dist.kind}({args})"


def _render_unit(unit: str) -> str:
    return unit if unit.isidentifier() else render_string(unit)


def _render_tag(value: Union[float, str]) -> str:
    if isinstance(value, str):
        return render_string(value)
    return format_number(value)


def _world_lines(world: World) -> List[str]:
    lines = [f"world {world.name}"]
    for variable in world.variables:
        initial = format_number(world.initial_state[variable.name])
        text = f"var {variable.name} = {initial}"
        if not variable.domain.is_unbounded:
            text += f" in {render_interval(variable.domain)}"
        if variable.unit:
            text += f" unit {_render_unit(variable.unit)}"
        lines.append(INDENT + text)
    for rule in world.dynamics:
        lines.append(f"{INDENT}dyn {rule}")
    for relation in world.relations:
        lines.append(f"{INDENT}rel {relation}")
    return lines


def _body_lines(body: AgentBody) -> List[str]:
    lines = [f"body {body.name}"]
    lines.extend(INDENT + render_channel("sensor", c) for c in body.sensors)
    lines.extend(INDENT + render_channel("actuator", c) for c in body.actuators)
    return lines


def _problem_lines(problem: Problem, depth: int, loose: bool) -> List[str]:
    pad = INDENT * depth
    if isinstance(problem, AtomicProblem):
        goal_lines = [pad + render_goal(g) for g in problem.goals + problem.failures]
        if loose:
            return goal_lines
        inner = [INDENT + line for line in goal_lines]
        return [pad + "atom"] + inner + [pad + "end"]
    if isinstance(problem, (Conjunction, Disjunction)):
        lines = [pad + ("all" if isinstance(problem, Conjunction) else "any")]
        for child in problem.children:
            lines.extend(_problem_lines(child, depth + 1, loose=False))
        return lines + [pad + "end"]
    if isinstance(problem, Negation):
        return (
            [pad + "not"]
            + _problem_lines(problem.child, depth + 1, loose=False)
            + [pad + "end"]
        )
    lines = [pad + "then"]
    for stage in problem.stages:
        lines.append(f"{pad}{INDENT}stage {format_number(stage.deadline)}")
        if not stage.initial.is_empty():
            lines.append(f"{pad}{INDENT * 2}require {render_clauses(stage.initial)}")
        lines.extend(_problem_lines(stage.problem, depth + 2, loose=True))
        lines.append(f"{pad}{INDENT}end")
    return lines + [pad + "end"]


def task_lines(task: Task) -> List[str]:
    lines = [
        f"task {task.name}",
        f"{INDENT}body {task.body}",
        f"{INDENT}mode {task.communication.keyword}",
        f"{INDENT}deadline {format_number(task.deadline)}",
        f"{INDENT}energy {task.energy.variable} > {format_number(task.energy.floor)}",
    ]
    for name, value in task.start.items():
        lines.append(f"{INDENT}start {name} = {format_number(value)}")
    if not task.initial.is_empty():
        lines.append(f"{INDENT}require {render_clauses(task.initial)}")
    for key, channel in task.channels.items():
        kind = key.partition(":")[0]
        lines.append(INDENT + render_channel(kind, channel))
    for rule in task.after:
        lines.append(f"{INDENT}after {rule}")
    for hint in task.hints:
        lines.append(f"{INDENT}hint {render_string(hint)}")
    for key, value in task.tags.items():
        lines.append(f"{INDENT}tag {key} = {_render_tag(value)}")
    lines.extend(_problem_lines(task.problem, 1, loose=True))
    return lines


def _variant_lines(spec: Any) -> List[str]:
    lines = [
        f"variant {spec.name}",
        f"{INDENT}base {spec.base}",
        f"{INDENT}count {spec.count}",
        f"{INDENT}seed {spec.seed}",
    ]
    for name, dist in spec.params.items():
        lines.append(f"{INDENT}param {name} = {render_distribution(dist)}")
    symbols = {"set": "=", "offset": "+", "scale": "*"}
    for name, perturbation in spec.start.items():
        lines.append(
            f"{INDENT}start {name} {symbols[perturbation.mode]} "
            f"{render_distribution(perturbation.value)}"
        )
    if spec.deadline_scale is not None:
        lines.append(f"{INDENT}deadline * {render_distribution(spec.deadline_scale)}")
    if spec.energy_scale is not None:
        lines.append(f"{INDENT}energy * {render_distribution(spec.energy_scale)}")
    for key, patch in spec.channels.items():
        kind, _, variable = key.partition(":")
        text = f"{kind} {variable}"
        if patch.noise_sigma is not None:
            text += f" noise {format_number(patch.noise_sigma)}"
        if patch.resolution is not None:
            text += f" resolution {format_number(patch.resolution)}"
        if patch.latency is not None:
            text += f" latency {patch.latency}"
        lines.append(INDENT + text)
    lines.extend(f"{INDENT}after {rule}" for rule in spec.after)
    lines.extend(INDENT + goal for goal in spec.goals)
    return lines


def serialize(doc: "TaskDocument", header: Optional[str] = None) -> str:
    """Canonical text of a document

    Args:
        doc: A valid document
        header: Optional comment placed on the first line

    Returns:
        UTF-8 text ending in a newline
    """
    blocks: List[List[str]] = []
    if header:
        blocks.append([f"# {line}" for line in header.splitlines()])
    blocks.append(_world_lines(doc.world))
    blocks.append(
        [f"sim delta {format_number(doc.sim.delta)} seed {doc.sim.seed}"]
    )
    blocks.extend(_body_lines(b) for b in doc.bodies)
    blocks.extend(task_lines(t) for t in doc.tasks)
    blocks.extend(_variant_lines(v) for v in doc.variants)
    return "\n\n".join("\n".join(block) for block in blocks) + "\n"
