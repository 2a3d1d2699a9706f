import numpy as np
import pytest

from platoon_fdi import AttackSpec, LeaderProfile, ScenarioSpec, VehicleDynamicsSpec, build_adjacency
from platoon_fdi.dynamics import continuous_matrices

KINDS = ["PF", "PLF", "TPF", "TPLF"]

CONFIG_TEMPLATE = """[platoon]
topology = {kind}
n = {n}

[dynamics]
tau = 0.5
ts = 0.1
k = 1,2,1
d = 20
v_init = 20

[attack]
gamma = 0,0,1
attacker = {p}
onset = {onset}
duration = {duration}
theta = {theta}
type = {goal}
d_min = {d_min}
d_max = {d_max}

[leader]
velocity = 20

[run]
output_dir = out
"""


def reference_dynamics(**overrides):
    params = dict(tau=0.5, ts=0.1, k=(1, 2, 1), d=20, v_init=20)
    params.update(overrides)
    return VehicleDynamicsSpec(**params)


def make_scenario(kind="PF", n=4, leader=None, **dyn):
    dynamics = reference_dynamics(**dyn)
    leader = leader or LeaderProfile.constant(dynamics.v_init)
    return ScenarioSpec(build_adjacency(kind, n), dynamics, leader)


def make_attack(**overrides):
    params = dict(gamma=(0, 0, 1), p=2, onset=0, duration=50, theta=50, goal="safety", d_min=5, d_max=60)
    params.update(overrides)
    return AttackSpec(**params)


def write_config(directory, **overrides):
    params = dict(kind="PF", n=4, p=2, onset=0, duration=50, theta=100, goal="safety", d_min=5, d_max=60)
    params.update(overrides)
    path = directory / f"{params['kind'].lower()}_{params['goal']}_{params['theta']}.cfg"
    path.write_text(CONFIG_TEMPLATE.format(**params))
    return path


@pytest.fixture
def pf_scenario():
    return make_scenario("PF", 4)


def series_zoh(tau, ts, terms=20):
    """exp([[A_c, B_c], [0, 0]] * ts) by truncated Taylor series."""
    a_c, b_c = continuous_matrices(tau)
    m = np.zeros((4, 4))
    m[:3, :3] = a_c
    m[:3, 3] = b_c
    m *= ts
    total = np.eye(4)
    term = np.eye(4)
    for j in range(1, terms):
        term = term @ m / j
        total = total + term
    return total[:3, :3], total[:3, 3]
