"""Platoon simulation and false-data-injection attack synthesis."""

from platoon_fdi.dynamics import VehicleDynamicsSpec, apply_attack, control_input, discretize, step
from platoon_fdi.errors import (
    ConfigError,
    ConsistencyError,
    IngestionError,
    PlatoonError,
    SimulationDivergedError,
    TopologyError,
)
from platoon_fdi.simulator import (
    AttackSpec,
    AttackVector,
    LeaderProfile,
    ScenarioSpec,
    SimulationTrace,
    ViolationEvent,
    initial_states,
    leader_step,
    monitor,
    simulate,
)
from platoon_fdi.synthesis import synthesize, unroll_symbolic, verify_attack
from platoon_fdi.topology import PlatoonTopology, TopologyKind, build_adjacency, neighbors

__version__ = "0.1.0"

__all__ = [
    "AttackSpec",
    "AttackVector",
    "ConfigError",
    "ConsistencyError",
    "IngestionError",
    "LeaderProfile",
    "PlatoonError",
    "PlatoonTopology",
    "ScenarioSpec",
    "SimulationDivergedError",
    "SimulationTrace",
    "TopologyError",
    "TopologyKind",
    "VehicleDynamicsSpec",
    "ViolationEvent",
    "apply_attack",
    "build_adjacency",
    "control_input",
    "discretize",
    "initial_states",
    "leader_step",
    "monitor",
    "neighbors",
    "simulate",
    "step",
    "synthesize",
    "unroll_symbolic",
    "verify_attack",
]
