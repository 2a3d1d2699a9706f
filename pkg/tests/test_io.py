import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CONFIG_TEMPLATE, make_attack, make_scenario, write_config
from platoon_fdi.config import dump_config, parse_config, parse_config_text
from platoon_fdi.csvio import (
    read_attack_csv,
    read_leader_profile,
    read_trace_csv,
    write_attack_csv,
    write_leader_profile,
    write_trace_csv,
)
from platoon_fdi.errors import ConfigError, IngestionError
from platoon_fdi.simulator import AttackVector, LeaderProfile, simulate
from platoon_fdi.topology import TopologyKind

BASE = dict(kind="PF", n=4, p=2, onset=0, duration=50, theta=50, goal="safety", d_min=50, d_max=60)


def config_text(**overrides):
    return CONFIG_TEMPLATE.format(**{**BASE, **overrides})


def test_reference_parameters_accepted():
    cfg = parse_config_text(config_text())
    sc, at = cfg.scenario, cfg.attack
    assert sc.topology.kind is TopologyKind.PF and sc.n == 4
    assert sc.dynamics.tau == 0.5 and sc.dynamics.ts == 0.1 and sc.dynamics.k == (1.0, 2.0, 1.0)
    assert at.gamma_vector.tolist() == [0, 0, 1]
    assert (at.p, at.onset, at.duration, at.theta, at.goal) == (2, 0, 50, 50, "safety")
    assert (at.d_min, at.d_max, at.eps_violation) == (50, 60, 1e-6)
    assert cfg.horizon == 250
    assert sc.leader.velocity_at(123) == 20


def test_inverted_thresholds_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config_text(config_text(d_min=70))
    assert err.value.location == "attack.d_min"


def test_empty_attack_surface_rejected():
    with pytest.raises(ConfigError, match="attack.gamma"):
        parse_config_text(config_text().replace("gamma = 0,0,1", "gamma = 0,0,0"))


@pytest.mark.parametrize(
    "old, new, location",
    [
        ("n = 4", "n = 4\ncolour = red", "platoon.colour"),
        ("tau = 0.5\n", "", "dynamics.tau"),
        ("theta = 50", "theta = fifty", "attack.theta"),
        ("k = 1,2,1", "k = 1,2", "dynamics.k"),
        ("attacker = 2", "attacker = 5", "attack.attacker"),
        ("onset = 0", "onset = -1", "attack.onset"),
        ("duration = 50", "duration = 0", "attack.duration"),
        ("type = safety", "type = chaos", "attack.type"),
        ("topology = PF", "topology = ring", "platoon.topology"),
        ("ts = 0.1", "ts = 0", "dynamics.ts"),
        ("d = 20\n", "d = 20\n[extra]\n", None),
    ],
)
def test_config_errors_are_located(old, new, location):
    with pytest.raises(ConfigError) as err:
        parse_config_text(config_text().replace(old, new, 1))
    if location:
        assert str(err.value).startswith(location)


def test_missing_section():
    text = config_text()
    text = text[: text.index("[attack]")] + text[text.index("[leader]"):]
    with pytest.raises(ConfigError, match=r"\[attack\]"):
        parse_config_text(text)


def test_spacing_in_platoon_section():
    text = config_text().replace("d = 20\n", "").replace("n = 4", "n = 4\nd = 25")
    assert parse_config_text(text).scenario.dynamics.d == 25
    with pytest.raises(ConfigError, match="d"):
        parse_config_text(config_text().replace("n = 4", "n = 4\nd = 25"))


def test_custom_matrix_config():
    text = config_text(kind="Custom", n=2).replace("n = 2", "n = 2\nmatrix = 0,0,0;1,0,0;1,1,0")
    cfg = parse_config_text(text.replace("attacker = 2", "attacker = 1"))
    assert cfg.scenario.topology.kind is TopologyKind.CUSTOM
    with pytest.raises(ConfigError, match="platoon.matrix"):
        parse_config_text(text.replace("1,1,0", "1,0,1"))


def test_explicit_matrices():
    text = config_text().replace("v_init = 20", "v_init = 20\na = 1,0.1,0, 0,1,0.1, 0,0,0.8\nb = 0,0,0.2")
    dyn = parse_config_text(text).scenario.dynamics
    assert dyn.user_matrices and dyn.A[2, 2] == 0.8 and dyn.B[2] == 0.2


def test_dump_parse_idempotent(tmp_path):
    write_leader_profile(tmp_path / "lead.csv", LeaderProfile((20.0, 21.0, 22.5)))
    text = config_text().replace("velocity = 20", "profile = lead.csv")
    first = parse_config_text(text, tmp_path)
    dumped = dump_config(first)
    second = parse_config_text(dumped, tmp_path)
    assert dump_config(second) == dumped
    assert second.scenario.topology == first.scenario.topology
    assert second.attack == first.attack
    assert second.scenario.leader == first.scenario.leader


def test_parse_config_file_resolves_paths(tmp_path):
    path = write_config(tmp_path)
    cfg = parse_config(path)
    assert cfg.output_dir == (tmp_path / "out").resolve()
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.cfg")


def test_leader_profile_examples(tmp_path):
    path = tmp_path / "lead.csv"
    path.write_text("k,velocity\n0,20\n1,20.5\n2,21\n")
    assert read_leader_profile(path).velocities == (20.0, 20.5, 21.0)
    path.write_text("k,velocity\n0,20\n1,20.5\n2,abc\n")
    with pytest.raises(IngestionError) as err:
        read_leader_profile(path)
    assert err.value.line == 4 and ":4:" in str(err.value)
    path.write_text("")
    with pytest.raises(IngestionError, match="header"):
        read_leader_profile(path)
    path.write_text("k,velocity\n")
    with pytest.raises(IngestionError, match="no data"):
        read_leader_profile(path)
    path.write_text("k,velocity\n0,20\n2,20\n")
    with pytest.raises(IngestionError, match="contiguous"):
        read_leader_profile(path)
    path.write_text("k,velocity\n0,nan\n")
    with pytest.raises(IngestionError, match="non-finite"):
        read_leader_profile(path)


def test_attack_csv_exact_roundtrip(tmp_path):
    deltas = (0.0, -0.0, 1e300, -1e-300, 0.1, 1 / 3, -42.0)
    path = write_attack_csv(tmp_path / "attack.csv", AttackVector(deltas))
    back = read_attack_csv(path, duration=len(deltas))
    assert [d.hex() for d in back.deltas] == [d.hex() for d in deltas]


@settings(max_examples=50)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=30))
def test_attack_csv_roundtrip_property(tmp_path_factory, deltas):
    path = write_attack_csv(tmp_path_factory.mktemp("a") / "attack.csv", AttackVector(tuple(deltas)))
    assert read_attack_csv(path).deltas == tuple(deltas)


def test_attack_csv_length_mismatch(tmp_path):
    path = write_attack_csv(tmp_path / "attack.csv", AttackVector((1.0,) * 49))
    with pytest.raises(IngestionError, match="49 rows"):
        read_attack_csv(path, duration=50)


def test_trace_csv_roundtrip(tmp_path, pf_scenario):
    attack = make_attack(duration=10, theta=30)
    trace = simulate(pf_scenario, attack, AttackVector(np.linspace(-30, 30, 10)), horizon=40)
    path = write_trace_csv(tmp_path / "trace.csv", trace)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,vehicle,position,velocity,acceleration,control,gap"
    assert lines[1].endswith(",,") and len(lines) == 1 + 41 * 5
    back = read_trace_csv(path)
    np.testing.assert_array_equal(back.states, trace.states)
    np.testing.assert_array_equal(back.controls[:, 1:], trace.controls[:, 1:])
    np.testing.assert_array_equal(back.gaps[:, 1:], trace.gaps[:, 1:])
    assert all(math.isnan(v) for v in back.controls[:, 0])


def test_trace_csv_rejects_truncation(tmp_path, pf_scenario):
    path = write_trace_csv(tmp_path / "trace.csv", simulate(pf_scenario, horizon=5))
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(IngestionError, match="expected 6 steps"):
        read_trace_csv(path)


def test_failed_write_leaves_no_file(tmp_path, monkeypatch):
    def refuse(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr("platoon_fdi.csvio.os.replace", refuse)
    with pytest.raises(OSError):
        write_attack_csv(tmp_path / "attack.csv", AttackVector((1.0,)))
    assert list(tmp_path.iterdir()) == []


def test_scenario_roundtrip_through_simulation(tmp_path):
    # a config and an in-memory scenario with the same values give identical traces
    cfg = parse_config(write_config(tmp_path, kind="TPLF"))
    vector = AttackVector(tuple(np.sin(np.arange(cfg.attack.duration)) * 80))
    direct = simulate(make_scenario("TPLF", 4), cfg.attack, vector, horizon=60)
    parsed = simulate(cfg.scenario, cfg.attack, vector, horizon=60)
    np.testing.assert_array_equal(direct.states, parsed.states)
