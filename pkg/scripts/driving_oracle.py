#!/usr/bin/env python3
"""
Independent fine-step integrator for the driving world at constant power

Integrates the four driving rules by hand, without taskenv, and reports
when the position first exceeds the target. Energy is ignored unless
--with-energy is given. Used to check the simulator's max-power run.
"""
import argparse
import math
import sys
from typing import Optional, Tuple


def integrate(
    power: float,
    delta: float,
    mass: float = 2.0,
    position: float = 2.0,
    target: float = 10.0,
    energy: Optional[float] = None,
    limit: float = 100.0,
) -> Tuple[Optional[float], float]:
    """Completion time (None if never reached) and energy spent"""
    velocity = 0.0
    spent = 0.0
    steps = 0
    while steps * delta < limit:
        if position > target:
            return steps * delta, spent
        if energy is not None and energy - spent <= 0:
            return None, spent
        # Every rule reads the pre-step values
        position, velocity = (
            max(0.0, position + delta * velocity),
            math.sqrt(2 * delta * power / mass + velocity**2),
        )
        spent += delta * power
        steps += 1
    return None, spent


def closed_form(power: float = 10.0, mass: float = 2.0, distance: float = 8.0) -> float:
    """Continuous-time completion from rest: x(t) = (2/3) sqrt(2P/m) t^(3/2)"""
    return (1.5 * distance / math.sqrt(2 * power / mass)) ** (2 / 3)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--power", type=float, default=10.0)
    parser.add_argument("--delta", type=float, default=1e-5)
    parser.add_argument("--with-energy", type=float, default=None, metavar="E0")
    args = parser.parse_args()

    time, spent = integrate(args.power, args.delta, energy=args.with_energy)
    if time is None:
        print(f"target not reached; energy spent {spent:.6f}")
        return 1
    print(f"completion time {time:.6f} s, energy spent {spent:.6f}")
    print(f"continuous limit {closed_form(args.power):.6f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
