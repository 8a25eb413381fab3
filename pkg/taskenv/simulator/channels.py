#!/usr/bin/env python3
"""
Sensor and actuator channel models: noise, quantization and latency
"""
import math
from collections import deque
from typing import Deque, Dict, Mapping, Optional

from ..seeding import NoiseStreams
from ..world import AgentBody, Channel, World
from .history import History

Observation = Dict[str, float]


def quantize(value: float, resolution: float) -> float:
    """Nearest multiple of ``resolution``, halves rounded away from zero

    A resolution of 0 leaves the value untouched.
    """
    if resolution <= 0:
        return value
    steps = math.floor(abs(value) / resolution + 0.5)
    return math.copysign(steps * resolution, value)


def sense(
    body: AgentBody,
    history: History,
    step: int,
    streams: Optional[NoiseStreams] = None,
) -> Observation:
    """What the body's sensors report at ``step``

    Each channel reads the true value ``latency`` steps back (the initial
    state before step 0), adds gaussian noise and quantizes.
    """
    streams = streams or NoiseStreams()
    observation = {}
    for channel in body.sensors:
        index = min(max(0, step - channel.latency), len(history.states) - 1)
        value = history.states[index][channel.variable]
        value += streams.normal(f"sensor:{channel.variable}", channel.noise_sigma)
        observation[channel.variable] = quantize(value, channel.resolution)
    return observation


class ActuatorChannels:
    """Latency buffers and output processing for a body's actuators

    A command issued at step n reaches the world at step n + latency; until
    then the variable is left untouched. Delivered values get noise, are
    quantized and clipped to the variable's domain.
    """

    def __init__(self, body: AgentBody, world: World):
        self.channels: Dict[str, Channel] = {c.variable: c for c in body.actuators}
        self.domains = {name: world.domain(name) for name in self.channels}
        self.pending: Dict[str, Deque[Optional[float]]] = {
            name: deque() for name in self.channels
        }

    def push(
        self, commands: Mapping[str, float], streams: NoiseStreams
    ) -> Dict[str, float]:
        """Queue this step's commands and return the values due now"""
        due = {}
        for name, channel in self.channels.items():
            queue = self.pending[name]
            queue.append(commands.get(name))
            if len(queue) <= channel.latency:
                continue
            value = queue.popleft()
            if value is None:
                continue
            value += streams.normal(f"actuator:{name}", channel.noise_sigma)
            value = quantize(value, channel.resolution)
            due[name] = self.domains[name].clip(value)
        return due

    def clone(self) -> "ActuatorChannels":
        twin = ActuatorChannels.__new__(ActuatorChannels)
        twin.channels = self.channels
        twin.domains = self.domains
        twin.pending = {name: deque(queue) for name, queue in self.pending.items()}
        return twin
