"""Scenario config files.

Flat INI with sections ``[platoon] [dynamics] [attack] [leader] [run]``::

    [platoon]
    topology = PF            ; PF, PLF, TPF, TPLF or Custom
    n = 4
    ; matrix = 0,0;1,0      ; Custom only, rows separated by ';'

    [dynamics]
    tau = 0.5
    ts = 0.1
    k = 1,2,1
    d = 20
    v_init = 20
    discretization = zoh     ; or euler; optional A (9 values) and B (3 values)

    [attack]
    gamma = 0,0,1
    attacker = 2
    onset = 0
    duration = 50
    theta = 50
    type = safety            ; or perf
    d_min = 5
    d_max = 60

    [leader]
    profile = leader.csv     ; or: velocity = 20 for a constant profile

    [run]
    horizon = 250
    output_dir = out

``d`` and ``v_init`` may sit in either ``[platoon]`` or ``[dynamics]``.
Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass
from pathlib import Path

from platoon_fdi.csvio import read_leader_profile
from platoon_fdi.dynamics import VehicleDynamicsSpec
from platoon_fdi.errors import ConfigError, IngestionError
from platoon_fdi.simulator import DEFAULT_TAIL, AttackSpec, LeaderProfile, ScenarioSpec
from platoon_fdi.topology import TopologyKind, build_adjacency, format_matrix, parse_matrix

ALLOWED = {
    "platoon": {"topology", "n", "matrix", "d", "v_init"},
    "dynamics": {"tau", "ts", "k", "k1", "k2", "k3", "d", "v_init", "discretization", "a", "b"},
    "attack": {"gamma", "attacker", "onset", "duration", "theta", "type", "d_min", "d_max", "eps_violation"},
    "leader": {"profile", "velocity"},
    "run": {"horizon", "output_dir"},
}
REQUIRED_SECTIONS = ("platoon", "dynamics", "attack")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: ScenarioSpec
    attack: AttackSpec
    horizon: int
    output_dir: Path
    leader_path: Path | None = None
    source: Path | None = None


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser

    def raw(self, section: str, key: str, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        if default is not None:
            return default
        raise ConfigError("missing required key", f"{section}.{key}")

    def number(self, section: str, key: str, default=None) -> float:
        text = self.raw(section, key, default)
        try:
            value = float(text)
        except (TypeError, ValueError):
            raise ConfigError(f"malformed number {text!r}", f"{section}.{key}") from None
        if not math.isfinite(value):
            raise ConfigError(f"value must be finite, got {text!r}", f"{section}.{key}")
        return value

    def positive(self, section: str, key: str) -> float:
        value = self.number(section, key)
        if value <= 0:
            raise ConfigError(f"must be > 0, got {value:g}", f"{section}.{key}")
        return value

    def at_least(self, section: str, key: str, low: int, default=None) -> int:
        value = self.integer(section, key, default)
        if value < low:
            raise ConfigError(f"must be >= {low}, got {value}", f"{section}.{key}")
        return value

    def integer(self, section: str, key: str, default=None) -> int:
        text = self.raw(section, key, default)
        try:
            return int(text)
        except (TypeError, ValueError):
            raise ConfigError(f"malformed integer {text!r}", f"{section}.{key}") from None

    def numbers(self, section: str, key: str, count: int) -> list[float]:
        text = self.raw(section, key)
        try:
            values = [float(v) for v in text.split(",")]
        except ValueError:
            raise ConfigError(f"malformed number list {text!r}", f"{section}.{key}") from None
        if len(values) != count:
            raise ConfigError(f"expected {count} comma-separated values, got {len(values)}", f"{section}.{key}")
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("values must be finite", f"{section}.{key}")
        return values

    def located(self, key: str, *sections: str) -> str:
        """Section holding ``key``, which must appear in at most one of ``sections``."""
        found = [s for s in sections if self.parser.has_option(s, key)]
        if len(found) > 1:
            raise ConfigError(f"{key} given in both {found[0]} and {found[1]}", f"{found[1]}.{key}")
        if not found:
            raise ConfigError("missing required key", f"{sections[0]}.{key}")
        return found[0]


def _wrap(location: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, IngestionError) as exc:
        raise ConfigError(str(exc), location) from exc


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return _from_parser(parser, path)


def parse_config_text(text: str, base_dir=".") -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return _from_parser(parser, Path(base_dir) / "<string>")


def _from_parser(parser: configparser.ConfigParser, path: Path) -> ScenarioConfig:
    for section in parser.sections():
        if section not in ALLOWED:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in ALLOWED[section]:
                raise ConfigError("unknown key", f"{section}.{key}")
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]")
    base = path.parent
    r = _Reader(parser)

    kind = _wrap("platoon.topology", TopologyKind.parse, r.raw("platoon", "topology"))
    n = r.at_least("platoon", "n", 1)
    matrix = None
    if kind is TopologyKind.CUSTOM:
        matrix = _wrap("platoon.matrix", parse_matrix, r.raw("platoon", "matrix"))
    elif parser.has_option("platoon", "matrix"):
        raise ConfigError("matrix is only allowed with topology = Custom", "platoon.matrix")
    topology = _wrap("platoon.matrix" if matrix is not None else "platoon.n", build_adjacency, kind, n, matrix)

    d_sec = r.located("d", "platoon", "dynamics")
    v_sec = r.located("v_init", "platoon", "dynamics")
    if parser.has_option("dynamics", "k"):
        if any(parser.has_option("dynamics", f"k{j}") for j in (1, 2, 3)):
            raise ConfigError("give either k or k1..k3, not both", "dynamics.k")
        gain = r.numbers("dynamics", "k", 3)
    else:
        gain = [r.number("dynamics", f"k{j}") for j in (1, 2, 3)]
    a_mat = b_mat = None
    if parser.has_option("dynamics", "a") or parser.has_option("dynamics", "b"):
        a_mat = r.numbers("dynamics", "a", 9)
        b_mat = r.numbers("dynamics", "b", 3)
    discretization = r.raw("dynamics", "discretization", "zoh").lower()
    if discretization not in ("zoh", "euler"):
        raise ConfigError(f"expected zoh or euler, got {discretization!r}", "dynamics.discretization")
    dynamics = _wrap(
        "dynamics",
        VehicleDynamicsSpec,
        tau=r.positive("dynamics", "tau"),
        ts=r.positive("dynamics", "ts"),
        k=tuple(gain),
        d=r.positive(d_sec, "d"),
        v_init=r.number(v_sec, "v_init"),
        discretization=discretization,
        A=a_mat,
        B=b_mat,
    )

    gamma_vals = r.numbers("attack", "gamma", 3)
    if any(g not in (0.0, 1.0) for g in gamma_vals):
        raise ConfigError("gamma flags must be 0 or 1", "attack.gamma")
    if not any(gamma_vals):
        raise ConfigError("attack surface is empty (all gamma flags 0)", "attack.gamma")
    d_min = r.number("attack", "d_min")
    d_max = r.number("attack", "d_max")
    if not d_min < d_max:
        raise ConfigError(f"d_min ({d_min:g}) must be below d_max ({d_max:g})", "attack.d_min")
    theta = r.number("attack", "theta")
    if theta < 0:
        raise ConfigError(f"must be >= 0, got {theta:g}", "attack.theta")
    goal = r.raw("attack", "type", "safety").lower()
    if goal not in ("safety", "perf"):
        raise ConfigError(f"expected safety or perf, got {goal!r}", "attack.type")
    eps = r.number("attack", "eps_violation", "1e-6")
    if eps <= 0:
        raise ConfigError(f"must be > 0, got {eps:g}", "attack.eps_violation")
    p = r.integer("attack", "attacker")
    if not 1 <= p <= n:
        raise ConfigError(f"attacker must be a follower in 1..{n}, got {p}", "attack.attacker")
    attack = _wrap(
        "attack",
        AttackSpec,
        gamma=tuple(bool(g) for g in gamma_vals),
        p=p,
        onset=r.at_least("attack", "onset", 0, "0"),
        duration=r.at_least("attack", "duration", 1),
        theta=theta,
        goal=goal,
        d_min=d_min,
        d_max=d_max,
        eps_violation=eps,
    )

    leader_path = None
    has_profile = parser.has_option("leader", "profile")
    has_velocity = parser.has_option("leader", "velocity")
    if has_profile and has_velocity:
        raise ConfigError("give either profile or velocity, not both", "leader.velocity")
    if has_profile:
        leader_path = (base / r.raw("leader", "profile")).resolve()
        if not leader_path.is_file():
            raise ConfigError(f"leader profile {leader_path} does not exist", "leader.profile")
        leader = _wrap("leader.profile", read_leader_profile, leader_path)
    else:
        leader = LeaderProfile.constant(r.number("leader", "velocity", repr(dynamics.v_init)))

    horizon = r.integer("run", "horizon", str(attack.end + DEFAULT_TAIL))
    if horizon < max(1, attack.end):
        raise ConfigError(f"horizon {horizon} ends before the attack window ({attack.end})", "run.horizon")
    output_dir = (base / r.raw("run", "output_dir", "out")).resolve()

    scenario = ScenarioSpec(topology, dynamics, leader)
    return ScenarioConfig(scenario, attack, horizon, output_dir, leader_path, path)


def dump_config(config: ScenarioConfig) -> str:
    """Normalised config text with every default spelled out; re-parses to the same config."""
    sc = config.scenario
    dyn = sc.dynamics
    at = config.attack
    parser = configparser.ConfigParser(interpolation=None)
    parser["platoon"] = {"topology": sc.topology.kind.value, "n": str(sc.n)}
    if sc.topology.kind is TopologyKind.CUSTOM:
        parser["platoon"]["matrix"] = format_matrix(sc.topology)
    parser["dynamics"] = {
        "tau": repr(dyn.tau),
        "ts": repr(dyn.ts),
        "k": ",".join(repr(x) for x in dyn.k),
        "d": repr(dyn.d),
        "v_init": repr(dyn.v_init),
        "discretization": dyn.discretization,
    }
    if dyn.user_matrices:
        parser["dynamics"]["a"] = ",".join(repr(float(x)) for x in dyn.A.ravel())
        parser["dynamics"]["b"] = ",".join(repr(float(x)) for x in dyn.B)
    parser["attack"] = {
        "gamma": ",".join(str(int(g)) for g in at.gamma),
        "attacker": str(at.p),
        "onset": str(at.onset),
        "duration": str(at.duration),
        "theta": repr(float(at.theta)),
        "type": at.goal,
        "d_min": repr(float(at.d_min)),
        "d_max": repr(float(at.d_max)),
        "eps_violation": repr(float(at.eps_violation)),
    }
    if config.leader_path is not None:
        parser["leader"] = {"profile": str(config.leader_path)}
    else:
        parser["leader"] = {"velocity": repr(sc.leader.velocities[0])}
    parser["run"] = {"horizon": str(config.horizon), "output_dir": str(config.output_dir)}

    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
