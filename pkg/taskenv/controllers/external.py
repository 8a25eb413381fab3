#!/usr/bin/env python3
"""
Controllers living in another process, spoken to over JSON lines

Each message is one JSON object on one line. taskenv writes to the
process's stdin:

* ``{"type": "reset", "seed": int, "sensors": [...], "actuators": [...]}``
  before every run (no reply expected)
* ``{"type": "step", "elapsed": float, "observation": {...}, "briefing": {...}}``
  once per step; the process answers with one line holding either
  ``{"commands": {...}}`` or the command map itself

Closing stdin tells the process to exit.
"""
import json
import math
import shlex
import subprocess
from typing import Any, Dict, Mapping, Optional

import numpy as np

from ..errors import RunAborted
from ..simulator import Briefing, Observation
from .base import BaseController


class ExternalController(BaseController):
    """Runs ``command`` once and keeps it alive across runs"""

    name = "external"
    description = "Third-party controller process speaking JSON lines on stdin/stdout"
    version = "1.0.0"

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.process: Optional[subprocess.Popen] = None

    @property
    def command(self) -> str:
        return str(self.config.get("command", self.config.get("value", "")))

    def validate_config(self) -> bool:
        return bool(self.command.strip())

    def _start(self) -> subprocess.Popen:
        if self.process is None or self.process.poll() is not None:
            self.logger.info(f"Starting external controller: {self.command}")
            try:
                self.process = subprocess.Popen(
                    shlex.split(self.command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except (OSError, ValueError) as e:
                raise RunAborted(
                    f"Cannot start external controller {self.command!r}: {e}"
                )
        return self.process

    def _send(self, message: Dict[str, Any]) -> None:
        process = self._start()
        assert process.stdin is not None
        try:
            process.stdin.write(json.dumps(message, sort_keys=True) + "\n")
            process.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise RunAborted(
                f"External controller {self.command!r} closed its input: {e}"
            )

    def _receive(self) -> Any:
        assert self.process is not None and self.process.stdout is not None
        line = self.process.stdout.readline()
        if not line:
            raise RunAborted(
                f"External controller {self.command!r} exited without replying"
            )
        try:
            return json.loads(line)
        except json.JSONDecodeError as e:
            raise RunAborted(
                f"External controller sent invalid JSON ({e}): {line.strip()!r}"
            )

    def reset(self, rng: np.random.Generator) -> None:
        super().reset(rng)
        self._send(
            {
                "type": "reset",
                "seed": int(rng.integers(2**31)),
                "sensors": list(self.body.sensor_names) if self.body else [],
                "actuators": list(self.actuators),
            }
        )

    def act(
        self, observation: Observation, elapsed: float, briefing: Briefing
    ) -> Mapping[str, float]:
        self._send(
            {
                "type": "step",
                "elapsed": elapsed,
                "observation": dict(observation),
                "briefing": briefing.to_dict(),
            }
        )
        reply = self._receive()
        if isinstance(reply, dict) and isinstance(reply.get("commands"), dict):
            reply = reply["commands"]
        if not isinstance(reply, dict):
            raise RunAborted(
                f"External controller reply is not a command map: {reply!r}"
            )
        commands = {}
        for name, value in reply.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise RunAborted(
                    f"External controller sent non-numeric {name}={value!r}"
                )
            if not math.isfinite(value):
                raise RunAborted(
                    f"External controller sent non-finite {name}={value!r}"
                )
            commands[str(name)] = float(value)
        return commands

    def close(self) -> None:
        if self.process is None:
            return
        if self.process.stdin is not None:
            try:
                self.process.stdin.close()
            except OSError:
                pass
        try:
            self.process.wait(timeout=float(self.config.get("timeout", 5.0)))
        except subprocess.TimeoutExpired:
            self.logger.warning(
                f"External controller {self.command!r} did not exit; killing"
            )
            self.process.kill()
            self.process.wait()
        self.process = None

    def get_help(self) -> str:
        return (
            f"{self.name}: {self.description}\n"
            "  external:command=<shell command>"
        )
