"""Concrete closed-loop simulation of a platoon, with optional FDI attack."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from platoon_fdi.dynamics import VehicleDynamicsSpec, apply_attack, control_input, step
from platoon_fdi.errors import SimulationDivergedError
from platoon_fdi.topology import PlatoonTopology, neighbors

GOALS = ("safety", "perf")
DEFAULT_TAIL = 200


@dataclass(frozen=True)
class LeaderProfile:
    """Leader velocity samples, one per step; the last sample is held beyond the end."""

    velocities: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.velocities)
        if not v:
            raise ValueError("leader profile must not be empty")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("leader profile contains non-finite velocities")
        object.__setattr__(self, "velocities", v)

    @classmethod
    def constant(cls, velocity: float) -> "LeaderProfile":
        return cls((velocity,))

    def velocity_at(self, k: int) -> float:
        return self.velocities[min(k, len(self.velocities) - 1)]


@dataclass(frozen=True)
class ScenarioSpec:
    topology: PlatoonTopology
    dynamics: VehicleDynamicsSpec
    leader: LeaderProfile

    @property
    def n(self) -> int:
        return self.topology.n


@dataclass(frozen=True)
class AttackSpec:
    """Who attacks, on which channels, when, how hard, and to what end.

    ``gamma`` flags (position, velocity, acceleration); ``p`` is the rogue
    follower; the attack is active for steps ``onset <= k < onset + duration``
    with every false-data value in ``[-theta, theta]``.
    """

    gamma: tuple[bool, bool, bool]
    p: int
    onset: int
    duration: int
    theta: float
    goal: str = "safety"
    d_min: float = 5.0
    d_max: float = 60.0
    eps_violation: float = 1e-6

    def __post_init__(self):
        gamma = tuple(bool(g) for g in self.gamma)
        if len(gamma) != 3:
            raise ValueError(f"gamma must have 3 flags, got {self.gamma}")
        if not any(gamma):
            raise ValueError("attack surface is empty: at least one gamma flag must be set")
        object.__setattr__(self, "gamma", gamma)
        if self.p < 1:
            raise ValueError(f"rogue vehicle must be a follower (p >= 1), got {self.p}")
        if self.onset < 0:
            raise ValueError(f"onset must be >= 0, got {self.onset}")
        if self.duration < 1:
            raise ValueError(f"duration must be >= 1, got {self.duration}")
        if not (self.theta >= 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be finite and >= 0, got {self.theta}")
        if self.goal not in GOALS:
            raise ValueError(f"goal must be one of {GOALS}, got {self.goal!r}")
        if not self.d_min < self.d_max:
            raise ValueError(f"d_min ({self.d_min}) must be below d_max ({self.d_max})")
        if not self.eps_violation > 0:
            raise ValueError(f"eps_violation must be > 0, got {self.eps_violation}")

    @property
    def gamma_vector(self) -> np.ndarray:
        return np.array(self.gamma, dtype=float)

    @property
    def end(self) -> int:
        """First step after the attack window."""
        return self.onset + self.duration

    def check_platoon(self, n: int) -> None:
        if not 1 <= self.p <= n:
            raise ValueError(f"rogue vehicle {self.p} outside followers 1..{n}")


@dataclass(frozen=True)
class AttackVector:
    deltas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(x) for x in self.deltas))

    def __len__(self):
        return len(self.deltas)

    def check(self, attack: AttackSpec) -> None:
        if len(self.deltas) != attack.duration:
            raise ValueError(f"attack vector has {len(self.deltas)} entries, duration is {attack.duration}")
        worst = max((abs(x) for x in self.deltas), default=0.0)
        if not worst <= attack.theta:
            raise ValueError(f"attack value {worst} exceeds bound theta={attack.theta}")


class ViolationEvent(NamedTuple):
    kind: str  # "safety", "performance" or "collision"
    k: int
    i: int
    gap: float


class Record(NamedTuple):
    k: int
    i: int
    state: np.ndarray
    u: float
    gap: float


@dataclass
class SimulationTrace:
    """Per-step, per-vehicle record of a run.

    ``states`` has shape ``(steps, n+1, 3)``; ``controls`` and ``gaps`` have
    shape ``(steps, n+1)`` with NaN in the leader column.
    """

    states: np.ndarray
    controls: np.ndarray
    gaps: np.ndarray
    events: list[ViolationEvent] = field(default_factory=list)
    window: tuple[int, int] | None = None

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1] - 1

    def records(self) -> Iterator[Record]:
        for k in range(self.states.shape[0]):
            for i in range(self.states.shape[1]):
                yield Record(k, i, self.states[k, i], float(self.controls[k, i]), float(self.gaps[k, i]))

    def min_gap(self) -> float:
        return float(np.min(self.gaps[:, 1:]))

    def max_gap(self) -> float:
        return float(np.max(self.gaps[:, 1:]))


def initial_states(n: int, spec: VehicleDynamicsSpec) -> np.ndarray:
    """Equilibrium start: vehicle ``i`` at ``(n - i + 1) * d``, common velocity, no acceleration."""
    if n < 1:
        raise ValueError(f"need at least one follower, got n={n}")
    x = np.zeros((n + 1, 3))
    x[:, 0] = [(n - i + 1) * spec.d for i in range(n + 1)]
    x[:, 1] = spec.v_init
    return x


def leader_step(s0: float, v_prev: float, v_next: float, ts: float) -> np.ndarray:
    if not ts > 0:
        raise ValueError(f"ts must be positive, got {ts}")
    a0 = (v_next - v_prev) / ts
    return np.array([s0 + v_prev * ts + 0.5 * a0 * ts * ts, v_next, a0])


def compute_gaps(states: np.ndarray) -> np.ndarray:
    gaps = np.full(states.shape[:-1], np.nan)
    gaps[..., 1:] = states[..., :-1, 0] - states[..., 1:, 0]
    return gaps


def monitor(trace_or_gaps, d_min: float | None = None, d_max: float | None = None) -> list[ViolationEvent]:
    """Threshold events for every ``(k, i)``, sorted by step then vehicle.

    A gap ``<= 0`` yields a collision event in addition to the safety one.
    Either threshold may be ``None`` to skip that check.
    """
    gaps = trace_or_gaps.gaps if isinstance(trace_or_gaps, SimulationTrace) else np.asarray(trace_or_gaps)
    events = []
    for k in range(gaps.shape[0]):
        for i in range(1, gaps.shape[1]):
            g = float(gaps[k, i])
            if d_min is not None and g < d_min:
                events.append(ViolationEvent("safety", k, i, g))
            if d_max is not None and g > d_max:
                events.append(ViolationEvent("performance", k, i, g))
            if g <= 0:
                events.append(ViolationEvent("collision", k, i, g))
    return events


def default_horizon(attack: AttackSpec | None) -> int:
    if attack is None:
        return DEFAULT_TAIL
    return attack.end + DEFAULT_TAIL


def simulate(
    scenario: ScenarioSpec,
    attack: AttackSpec | None = None,
    vector: AttackVector | Sequence[float] | None = None,
    horizon: int | None = None,
    d_min: float | None = None,
    d_max: float | None = None,
) -> SimulationTrace:
    """Run the closed loop for ``horizon`` steps (``horizon + 1`` recorded states).

    With an attack, each neighbour of the rogue vehicle computes its control
    from ``x_p + gamma * delta[k - onset]`` during the window; the rogue itself
    and everyone else use true states. Thresholds default to the attack's.
    """
    n = scenario.n
    dyn = scenario.dynamics
    topo = scenario.topology
    if horizon is None:
        horizon = default_horizon(attack)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")

    deltas = None
    if attack is not None:
        attack.check_platoon(n)
        if vector is None:
            raise ValueError("an attack spec needs an attack vector to simulate")
        if not isinstance(vector, AttackVector):
            vector = AttackVector(vector)
        vector.check(attack)
        if attack.end > horizon:
            raise ValueError(f"attack window ends at {attack.end}, beyond horizon {horizon}")
        deltas = vector.deltas
        if d_min is None:
            d_min = attack.d_min
        if d_max is None:
            d_max = attack.d_max
        gamma = attack.gamma_vector
        victims = {i for i in range(1, n + 1) if attack.p in neighbors(topo, i)}

    states = np.empty((horizon + 1, n + 1, 3))
    controls = np.full((horizon + 1, n + 1), np.nan)
    x = initial_states(n, dyn)
    for k in range(horizon + 1):
        states[k] = x
        falsified = None
        if deltas is not None and attack.onset <= k < attack.end:
            falsified = {attack.p: apply_attack(x[attack.p], gamma, deltas[k - attack.onset])}
        for i in range(1, n + 1):
            fake = falsified if falsified is not None and i in victims else None
            controls[k, i] = control_input(i, x, topo, dyn, fake)
        if k == horizon:
            break
        nxt = np.empty_like(x)
        nxt[0] = leader_step(x[0, 0], x[0, 1], scenario.leader.velocity_at(k + 1), dyn.ts)
        for i in range(1, n + 1):
            try:
                nxt[i] = step(x[i], controls[k, i], dyn)
            except SimulationDivergedError as exc:
                raise SimulationDivergedError(
                    f"closed loop diverged at step {k + 1}, vehicle {i}", k=k + 1, vehicle=i
                ) from exc
        x = nxt

    gaps = compute_gaps(states)
    window = (attack.onset, attack.duration) if attack is not None else None
    return SimulationTrace(states, controls, gaps, monitor(gaps, d_min, d_max), window)
