"""Attack-vector synthesis by symbolic unrolling and disjunct enumeration.

The attacked closed loop is linear in the false-data sequence, so every gap
``e_i[k]`` is an affine function of ``delta[0..T-1]``. Unrolling the loop over
affine values (a constant column plus one column per ``delta[t]``) turns each
candidate violation ``(i, k)`` into a small linear feasibility problem.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from platoon_fdi.dynamics import desired_offset
from platoon_fdi.simulator import (
    AttackSpec,
    AttackVector,
    ScenarioSpec,
    SimulationTrace,
    ViolationEvent,
    initial_states,
    leader_step,
    simulate,
)
from platoon_fdi.solvers import FeasibilityProblem, Infeasible, Unknown, Witness, solve_feasibility
from platoon_fdi.topology import neighbors

log = logging.getLogger(__name__)

VERIFY_TOL = 1e-6


@dataclass(frozen=True)
class AffineExpr:
    constant: float
    coeffs: np.ndarray

    def __call__(self, delta) -> float:
        return self.constant + float(np.dot(self.coeffs, delta))


@dataclass
class GapExpressions:
    """Affine gap expressions for steps ``0..last`` and vehicles ``0..n``.

    ``constant[k, i]`` is the clean gap, ``coeffs[k, i, t]`` its sensitivity
    to ``delta[t]``. The leader column is NaN.
    """

    constant: np.ndarray
    coeffs: np.ndarray

    @property
    def last(self) -> int:
        return self.constant.shape[0] - 1

    def __getitem__(self, key) -> AffineExpr:
        k, i = key
        if i < 1:
            raise IndexError("the leader has no gap")
        return AffineExpr(float(self.constant[k, i]), self.coeffs[k, i])

    def evaluate(self, delta) -> np.ndarray:
        return self.constant + self.coeffs @ np.asarray(delta, dtype=float)


def unroll_symbolic(scenario: ScenarioSpec, attack: AttackSpec) -> GapExpressions:
    """Gap expressions for every step ``0 <= k <= onset + duration``."""
    n = scenario.n
    attack.check_platoon(n)
    dyn = scenario.dynamics
    topo = scenario.topology
    nvars = attack.duration
    last = attack.end
    gamma = attack.gamma_vector
    gain = dyn.gain

    # x[i] is (3, 1 + T): column 0 constant, column 1 + t coefficient of delta[t]
    x = np.zeros((n + 1, 3, 1 + nvars))
    x[:, :, 0] = initial_states(n, dyn)
    nbrs = [neighbors(topo, i) for i in range(n + 1)]

    constant = np.full((last + 1, n + 1), np.nan)
    coeffs = np.zeros((last + 1, n + 1, nvars))
    for k in range(last + 1):
        gaps = x[:-1, 0, :] - x[1:, 0, :]
        constant[k, 1:] = gaps[:, 0]
        coeffs[k, 1:] = gaps[:, 1:]
        if k == last:
            break
        injecting = attack.onset <= k < attack.end
        nxt = np.empty_like(x)
        for i in range(1, n + 1):
            u = np.zeros(1 + nvars)
            for j in nbrs[i]:
                err = x[i] - x[j]
                err[0, 0] -= desired_offset(i, j, dyn.d)
                if injecting and j == attack.p:
                    err[:, 1 + k - attack.onset] -= gamma
                u -= gain @ err
            nxt[i] = dyn.A @ x[i] + np.outer(dyn.B, u)
        lead = x[0, :, 0]
        nxt[0] = 0.0
        nxt[0, :, 0] = leader_step(lead[0], lead[1], scenario.leader.velocity_at(k + 1), dyn.ts)
        x = nxt
    return GapExpressions(constant, coeffs)


def allowed_vehicles(attack: AttackSpec, n: int) -> list[int]:
    """Vehicles whose gap may witness a violation.

    Safety spares the gap right behind the rogue; performance looks from the
    rogue backwards.
    """
    if attack.goal == "safety":
        return [i for i in range(1, n + 1) if i <= attack.p or i >= attack.p + 2]
    return list(range(attack.p, n + 1))


def assertion_window(attack: AttackSpec) -> range:
    return range(attack.onset, attack.end + 1)


def _check_disjunct(exprs: GapExpressions, attack: AttackSpec, disjunct) -> tuple[int, int]:
    i, k = disjunct
    n = exprs.constant.shape[1] - 1
    if i not in allowed_vehicles(attack, n):
        raise ValueError(f"vehicle {i} is not a {attack.goal} disjunct for rogue {attack.p} (n={n})")
    if k not in assertion_window(attack) or k > exprs.last:
        raise ValueError(f"step {k} outside assertion window [{attack.onset}, {attack.end}]")
    return i, k


def build_safety_problem(exprs: GapExpressions, attack: AttackSpec, disjunct) -> FeasibilityProblem:
    """``e_i[k] < d_min`` while the gap behind the rogue stays in ``[d_min, d_max]``.

    The objective pushes ``e_i[k]`` as low as the constraints allow.
    """
    i, k = _check_disjunct(exprs, attack, disjunct)
    target = exprs[k, i]
    problem = FeasibilityProblem.boxed(
        attack.duration, attack.theta, objective=target.coeffs.copy(), label=f"safety i={i} k={k}"
    )
    problem.add(target.coeffs, "<=", attack.d_min - attack.eps_violation - target.constant)
    guarded = attack.p + 1
    if guarded < exprs.constant.shape[1]:
        for kappa in assertion_window(attack):
            rogue_gap = exprs[kappa, guarded]
            problem.add(rogue_gap.coeffs, ">=", attack.d_min - rogue_gap.constant)
            problem.add(rogue_gap.coeffs, "<=", attack.d_max - rogue_gap.constant)
    return problem


def build_perf_problem(exprs: GapExpressions, attack: AttackSpec, disjunct) -> FeasibilityProblem:
    """``e_i[k] > d_max``; the objective pushes the gap as high as possible."""
    i, k = _check_disjunct(exprs, attack, disjunct)
    target = exprs[k, i]
    problem = FeasibilityProblem.boxed(
        attack.duration, attack.theta, objective=-target.coeffs, label=f"perf i={i} k={k}"
    )
    problem.add(target.coeffs, ">=", attack.d_max + attack.eps_violation - target.constant)
    return problem


def disjuncts(attack: AttackSpec, n: int) -> list[tuple[int, int]]:
    """Enumeration order: step ascending, then vehicle ascending."""
    vehicles = allowed_vehicles(attack, n)
    return [(i, k) for k in assertion_window(attack) for i in vehicles]


@dataclass
class SynthesisResult:
    """``status`` is ``"found"``, ``"not_found"`` or ``"inconclusive"``."""

    status: str
    vector: AttackVector | None = None
    disjunct: tuple[int, int] | None = None
    problems_solved: int = 0
    unknown_reasons: list[str] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.status == "found"


def synthesize(scenario: ScenarioSpec, attack: AttackSpec, backend: str | None = None) -> SynthesisResult:
    """Search for a false-data sequence within ``[-theta, theta]`` that violates the goal.

    Returns the witness of the first feasible disjunct in enumeration order.
    If no disjunct is feasible but some were undecided by the backend, the
    result is inconclusive rather than not-found.
    """
    exprs = unroll_symbolic(scenario, attack)
    build = build_safety_problem if attack.goal == "safety" else build_perf_problem
    unknown = []
    solved = 0
    for disjunct in disjuncts(attack, scenario.n):
        outcome = solve_feasibility(build(exprs, attack, disjunct), backend)
        solved += 1
        if isinstance(outcome, Witness):
            vector = AttackVector(outcome.values)
            log.info("attack found at disjunct i=%d k=%d after %d problems", *disjunct, solved)
            return SynthesisResult("found", vector, disjunct, solved, unknown)
        if isinstance(outcome, Unknown):
            unknown.append(f"i={disjunct[0]} k={disjunct[1]}: {outcome.reason}")
        else:
            assert isinstance(outcome, Infeasible)
    if unknown:
        return SynthesisResult("inconclusive", problems_solved=solved, unknown_reasons=unknown)
    return SynthesisResult("not_found", problems_solved=solved)


@dataclass
class VerificationReport:
    holds: bool
    events: list[ViolationEvent]
    violations: list[tuple[int, int, float]] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)
    trace: SimulationTrace | None = None


def check_goal(trace: SimulationTrace, attack: AttackSpec, tol: float = VERIFY_TOL) -> tuple[list, list[str]]:
    """Window violations and failed side conditions of the goal predicate on a concrete trace."""
    n = trace.n
    window = assertion_window(attack)
    violations = []
    for k in window:
        for i in allowed_vehicles(attack, n):
            gap = float(trace.gaps[k, i])
            if (attack.goal == "safety" and gap < attack.d_min) or (attack.goal == "perf" and gap > attack.d_max):
                violations.append((i, k, gap))
    failed = []
    if not violations:
        failed.append(f"no {attack.goal} violation among vehicles {allowed_vehicles(attack, n)} in steps "
                      f"[{window.start}, {window.stop - 1}]")
    guarded = attack.p + 1
    if attack.goal == "safety" and guarded <= n:
        for k in window:
            gap = float(trace.gaps[k, guarded])
            if gap < attack.d_min - tol or gap > attack.d_max + tol:
                failed.append(f"rogue gap e_{guarded}[{k}]={gap:.9g} outside [{attack.d_min}, {attack.d_max}]")
    return violations, failed


def verify_attack(
    scenario: ScenarioSpec,
    attack: AttackSpec,
    vector: AttackVector,
    horizon: int | None = None,
    tol: float = VERIFY_TOL,
) -> VerificationReport:
    """Re-simulate ``vector`` concretely and check the goal predicate over the window."""
    if len(vector) != attack.duration:
        raise ValueError(f"attack vector has {len(vector)} entries, duration is {attack.duration}")
    failed = []
    worst = max(abs(x) for x in vector.deltas)
    sim_attack = attack
    if worst > attack.theta:
        failed.append(f"attack value {worst} exceeds theta={attack.theta}")
        sim_attack = dataclasses.replace(attack, theta=worst)
    trace = simulate(scenario, sim_attack, vector, horizon)
    violations, goal_failed = check_goal(trace, attack, tol)
    failed.extend(goal_failed)
    return VerificationReport(not failed, trace.events, violations, failed, trace)
