import itertools

import numpy as np
import pytest

from platoon_fdi import simplex
from platoon_fdi.errors import SolverError
from platoon_fdi.solvers import (
    BACKENDS,
    Constraint,
    FeasibilityProblem,
    Infeasible,
    Unknown,
    Witness,
    register_backend,
    solve_feasibility,
)


def vertex_oracle(problem, tol=1e-9):
    """Feasible iff some vertex of the bounded polytope exists: intersect every
    ``num_vars``-subset of constraint/bound hyperplanes and test the point."""
    n = problem.num_vars
    planes = [(c.coeffs, c.rhs) for c in problem.constraints]
    for t in range(n):
        e = np.zeros(n)
        e[t] = 1.0
        planes += [(e, problem.lower[t]), (e, problem.upper[t])]
    for subset in itertools.combinations(planes, n):
        a = np.array([p[0] for p in subset])
        if abs(np.linalg.det(a)) < 1e-10:
            continue
        x = np.linalg.solve(a, np.array([p[1] for p in subset]))
        if not problem.violations(x, tol=tol):
            return True
    return False


def random_problem(rng, n=5, m=4):
    problem = FeasibilityProblem.boxed(n, rng.uniform(0.5, 3.0))
    for _ in range(m):
        coeffs = rng.normal(size=n)
        relation = rng.choice(["<=", ">="])
        problem.add(coeffs, relation, rng.normal(0, 3.0))
    return problem


def test_single_var_feasible():
    p = FeasibilityProblem.boxed(1, 1.0)
    p.add([1.0], ">=", 0.5)
    out = solve_feasibility(p)
    assert isinstance(out, Witness)
    assert 0.5 <= out.values[0] <= 1.0


def test_single_var_infeasible():
    p = FeasibilityProblem.boxed(1, 1.0)
    p.add([1.0], ">=", 2.0)
    assert isinstance(solve_feasibility(p), Infeasible)


@pytest.mark.parametrize("seed", range(50))
def test_agrees_with_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    problem = random_problem(rng)
    out = solve_feasibility(problem, "simplex")
    assert isinstance(out, (Witness, Infeasible))
    assert isinstance(out, Witness) == vertex_oracle(problem)


def test_random_instances_cover_both_outcomes():
    feasible = [vertex_oracle(random_problem(np.random.default_rng(s))) for s in range(50)]
    assert 5 <= sum(feasible) <= 45


@pytest.mark.parametrize("seed", range(20))
def test_simplex_agrees_with_highs(seed):
    rng = np.random.default_rng(100 + seed)
    problem = random_problem(rng, n=30, m=40)
    problem.objective = rng.normal(size=30)
    ours = solve_feasibility(problem, "simplex")
    theirs = solve_feasibility(problem, "scipy")
    assert type(ours) is type(theirs)
    if isinstance(ours, Witness):
        c = problem.objective
        assert c @ ours.values == pytest.approx(c @ theirs.values, abs=1e-6)


def test_lp_optimum_small():
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6, 0 <= x, y <= 10
    res = simplex.solve_lp([-1, -1], [[1, 2], [3, 1]], [4, 6], [0, 0], [10, 10])
    assert res.status == simplex.OPTIMAL
    np.testing.assert_allclose(res.x, [1.6, 1.2], atol=1e-12)


def test_lp_unbounded_and_inverted_bounds():
    assert simplex.solve_lp([-1], np.zeros((0, 1)), [], [0], [np.inf]).status == simplex.UNBOUNDED
    assert simplex.solve_lp([0], np.zeros((0, 1)), [], [1], [0]).status == simplex.INFEASIBLE


def test_degenerate_zero_box():
    p = FeasibilityProblem.boxed(3, 0.0)
    p.add([1, 1, 1], "<=", 0.0)
    out = solve_feasibility(p)
    assert isinstance(out, Witness)
    assert np.array_equal(out.values, np.zeros(3))
    q = FeasibilityProblem.boxed(3, 0.0)
    q.add([1, 0, 0], ">=", 1e-6)
    assert isinstance(solve_feasibility(q), Infeasible)


def test_equality_pair_and_redundant_rows():
    p = FeasibilityProblem.boxed(2, 5.0)
    p.add([1, 1], ">=", 3)
    p.add([1, 1], "<=", 3)
    p.add([2, 2], ">=", 6)
    p.add([1, -1], ">=", 1)
    out = solve_feasibility(p)
    assert isinstance(out, Witness)
    assert out.values.sum() == pytest.approx(3)


def test_constant_constraints_presolved():
    p = FeasibilityProblem.boxed(2, 1.0)
    p.add([0, 0], "<=", -1.0)
    assert isinstance(solve_feasibility(p), Infeasible)
    q = FeasibilityProblem.boxed(2, 1.0)
    q.add([0, 0], ">=", -1.0)
    assert isinstance(solve_feasibility(q), Witness)


def test_cycling_prone_problem_terminates():
    # Beale's classic cycling example, as a maximisation over a box
    a = [[0.25, -60, -1 / 25, 9], [0.5, -90, -1 / 50, 3], [0, 0, 1, 0]]
    res = simplex.solve_lp([-0.75, 150, -1 / 50, 6], a, [0, 0, 1], [0] * 4, [np.inf] * 4)
    assert res.status == simplex.OPTIMAL
    assert res.objective == pytest.approx(-0.05)


def test_problem_validation():
    with pytest.raises(ValueError):
        FeasibilityProblem(2, [1, 1], [0, 0])
    with pytest.raises(ValueError):
        FeasibilityProblem(2, [0, 0], [1, 1], [Constraint(np.ones(3), "<=", 0)])
    p = FeasibilityProblem.boxed(2, 1.0)
    with pytest.raises(ValueError):
        p.add([1, 1], "==", 0)


def test_unknown_backend_name():
    with pytest.raises(SolverError):
        solve_feasibility(FeasibilityProblem.boxed(1, 1.0), "z3000")


def test_env_var_selects_backend(monkeypatch):
    calls = []

    def spy(problem):
        calls.append(problem)
        return Unknown("resource limit")

    register_backend("spy", spy)
    try:
        monkeypatch.setenv("PLATOON_SOLVER", "spy")
        p = FeasibilityProblem.boxed(1, 1.0)
        p.add([1.0], ">=", 0.5)
        assert isinstance(solve_feasibility(p), Unknown)
        assert len(calls) == 1
    finally:
        BACKENDS.pop("spy")


def test_bad_witness_from_plugin_is_unknown():
    register_backend("liar", lambda problem: Witness(np.full(problem.num_vars, 7.0)))
    try:
        p = FeasibilityProblem.boxed(1, 1.0)
        p.add([1.0], ">=", 0.5)
        out = solve_feasibility(p, "liar")
        assert isinstance(out, Unknown)
        assert "re-validation" in out.reason
    finally:
        BACKENDS.pop("liar")


def test_bad_witness_from_builtin_raises(monkeypatch):
    monkeypatch.setitem(BACKENDS, "simplex", lambda problem: Witness(np.full(problem.num_vars, 7.0)))
    p = FeasibilityProblem.boxed(1, 1.0)
    p.add([1.0], ">=", 0.5)
    with pytest.raises(SolverError):
        solve_feasibility(p, "simplex")
