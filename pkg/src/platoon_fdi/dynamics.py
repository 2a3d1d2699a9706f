"""Longitudinal vehicle model, distributed control law and state falsification.

A vehicle state is a length-3 float array ``[position, velocity, acceleration]``.
The continuous model is a third-order lag::

    A_c = [[0, 1, 0], [0, 0, 1], [0, 0, -1/tau]],   B_c = [0, 0, 1/tau]^T
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from platoon_fdi.errors import ConsistencyError, SimulationDivergedError
from platoon_fdi.topology import PlatoonTopology, neighbors

DISCRETIZATIONS = ("zoh", "euler")


def continuous_matrices(tau: float) -> tuple[np.ndarray, np.ndarray]:
    a_c = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0 / tau]])
    b_c = np.array([0.0, 0.0, 1.0 / tau])
    return a_c, b_c


def discretize(tau: float, ts: float, method: str = "zoh") -> tuple[np.ndarray, np.ndarray]:
    """Discrete ``(A, B)`` for sampling period ``ts``.

    ``B`` is returned as a flat length-3 vector.
    """
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive, got {tau}")
    if not (ts > 0 and math.isfinite(ts)):
        raise ValueError(f"ts must be positive, got {ts}")
    if method == "euler":
        a_c, b_c = continuous_matrices(tau)
        return np.eye(3) + a_c * ts, b_c * ts
    if method != "zoh":
        raise ValueError(f"unknown discretization {method!r}, expected one of {DISCRETIZATIONS}")

    decay = math.exp(-ts / tau)
    # 1 - e^{-ts/tau} without cancellation for small ts/tau
    lag = -math.expm1(-ts / tau)
    a = np.array(
        [
            [1.0, ts, tau * ts - tau * tau * lag],
            [0.0, 1.0, tau * lag],
            [0.0, 0.0, decay],
        ]
    )
    b = np.array([ts * ts / 2 - tau * ts + tau * tau * lag, ts - tau * lag, lag])
    return a, b


@dataclass(frozen=True, eq=False)
class VehicleDynamicsSpec:
    """Homogeneous vehicle model plus controller parameters.

    ``A`` and ``B`` are derived from ``tau``/``ts`` with ``discretization``
    unless given explicitly, in which case they are used verbatim.
    """

    tau: float
    ts: float
    k: tuple[float, float, float]
    d: float
    v_init: float
    discretization: str = "zoh"
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    user_matrices: bool = field(default=False, init=False)

    def __post_init__(self):
        for name in ("tau", "ts", "d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")
        if not math.isfinite(self.v_init):
            raise ValueError(f"v_init must be finite, got {self.v_init}")
        k = tuple(float(x) for x in self.k)
        if len(k) != 3 or not all(math.isfinite(x) for x in k):
            raise ValueError(f"controller gain must be 3 finite numbers, got {self.k}")
        object.__setattr__(self, "k", k)
        if self.discretization not in DISCRETIZATIONS:
            raise ValueError(f"unknown discretization {self.discretization!r}")

        if (self.A is None) != (self.B is None):
            raise ValueError("A and B must be supplied together")
        if self.A is None:
            a, b = discretize(self.tau, self.ts, self.discretization)
        else:
            a = np.array(self.A, dtype=float).reshape(3, 3)
            b = np.array(self.B, dtype=float).reshape(3)
            if not (np.isfinite(a).all() and np.isfinite(b).all()):
                raise ValueError("A and B must be finite")
            object.__setattr__(self, "user_matrices", True)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def gain(self) -> np.ndarray:
        return np.array(self.k)


def desired_offset(i: int, j: int, d: float) -> float:
    """Signed desired position of vehicle ``i`` relative to ``j`` (negative behind)."""
    return -(i - j) * d


def apply_attack(x, gamma, delta: float) -> np.ndarray:
    """Falsified copy of ``x``: every channel flagged in ``gamma`` shifted by ``delta``."""
    return np.asarray(x, dtype=float) + np.asarray(gamma, dtype=float) * delta


def control_input(
    i: int,
    states,
    topology: PlatoonTopology,
    spec: VehicleDynamicsSpec,
    falsified: dict | None = None,
) -> float:
    """Control of follower ``i`` from the (possibly falsified) states it receives.

    ``u = -sum_j K (x_i - x_j - [offset_ij, 0, 0])`` over the neighbour set, where
    ``x_j`` is replaced by ``falsified[j]`` when present. The sum is zero when
    the platoon sits exactly at its equilibrium spacing.
    """
    if i < 1:
        raise ValueError(f"control is defined for followers only, got vehicle {i}")
    nbrs = neighbors(topology, i)
    falsified = falsified or {}
    extra = set(falsified) - set(nbrs)
    if extra:
        raise ConsistencyError(f"falsified states for non-neighbours {sorted(extra)} of vehicle {i}")
    try:
        x_i = np.asarray(states[i], dtype=float)
        gain = spec.gain
        u = 0.0
        for j in nbrs:
            x_j = np.asarray(falsified[j] if j in falsified else states[j], dtype=float)
            err = x_i - x_j
            err[0] -= desired_offset(i, j, spec.d)
            u -= float(gain @ err)
    except (IndexError, KeyError) as exc:
        raise ConsistencyError(f"missing state for vehicle {i} or one of its neighbours {nbrs}") from exc
    return u


def step(x, u: float, spec: VehicleDynamicsSpec) -> np.ndarray:
    """One sample of ``x[k+1] = A x[k] + B u[k]``."""
    with np.errstate(over="ignore", invalid="ignore"):
        nxt = spec.A @ np.asarray(x, dtype=float) + spec.B * u
    if not np.isfinite(nxt).all():
        raise SimulationDivergedError(f"non-finite state {nxt} after control {u}")
    return nxt
