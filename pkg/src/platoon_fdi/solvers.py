"""Linear feasibility problems over box-bounded variables and their backends.

A backend is a callable ``(problem) -> SolverOutcome``. The built-in
``simplex`` backend is complete; others (``scipy``) may report
:class:`Unknown` when they hit resource limits. Every witness is re-checked
against the posed problem before it is returned.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from platoon_fdi import simplex
from platoon_fdi.errors import SolverError

WITNESS_TOL = 1e-7
ENV_VAR = "PLATOON_SOLVER"


class Constraint(NamedTuple):
    coeffs: np.ndarray
    relation: str  # "<=" or ">="
    rhs: float

    def slack(self, x) -> float:
        """Non-negative when satisfied."""
        lhs = float(np.dot(self.coeffs, x))
        return self.rhs - lhs if self.relation == "<=" else lhs - self.rhs


@dataclass
class FeasibilityProblem:
    """Find ``x`` with ``lower <= x <= upper`` satisfying every constraint.

    ``objective``, when set, is minimised among feasible points; it only
    steers which witness comes back, never whether one exists.
    """

    num_vars: int
    lower: np.ndarray
    upper: np.ndarray
    constraints: list[Constraint] = field(default_factory=list)
    objective: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.num_vars,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.num_vars,)).copy()
        if (self.lower > self.upper).any():
            raise ValueError("variable bounds are not well ordered")
        for c in self.constraints:
            if len(c.coeffs) != self.num_vars:
                raise ValueError(f"constraint has {len(c.coeffs)} coefficients, expected {self.num_vars}")
            if c.relation not in ("<=", ">="):
                raise ValueError(f"unknown relation {c.relation!r}")

    @classmethod
    def boxed(cls, num_vars: int, bound: float, **kw) -> "FeasibilityProblem":
        return cls(num_vars, np.full(num_vars, -bound), np.full(num_vars, bound), **kw)

    def add(self, coeffs, relation: str, rhs: float) -> None:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.num_vars,):
            raise ValueError(f"constraint has shape {coeffs.shape}, expected ({self.num_vars},)")
        if relation not in ("<=", ">="):
            raise ValueError(f"unknown relation {relation!r}")
        self.constraints.append(Constraint(coeffs, relation, float(rhs)))

    def violations(self, x, tol: float = WITNESS_TOL) -> list[str]:
        """Human-readable list of everything ``x`` fails (empty when feasible)."""
        x = np.asarray(x, dtype=float)
        out = []
        if x.shape != (self.num_vars,) or not np.isfinite(x).all():
            return [f"witness has shape {x.shape} or non-finite entries"]
        for t in np.flatnonzero(x < self.lower - tol):
            out.append(f"x[{t}]={x[t]} below {self.lower[t]}")
        for t in np.flatnonzero(x > self.upper + tol):
            out.append(f"x[{t}]={x[t]} above {self.upper[t]}")
        for idx, c in enumerate(self.constraints):
            if c.slack(x) < -tol:
                out.append(f"constraint {idx} ({c.relation} {c.rhs}) violated by {-c.slack(x):.3g}")
        return out


@dataclass(frozen=True)
class Witness:
    values: np.ndarray


@dataclass(frozen=True)
class Infeasible:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str


SolverOutcome = Witness | Infeasible | Unknown


def simplex_backend(problem: FeasibilityProblem) -> SolverOutcome:
    if problem.constraints:
        a = np.array([c.coeffs if c.relation == "<=" else -c.coeffs for c in problem.constraints])
        b = np.array([c.rhs if c.relation == "<=" else -c.rhs for c in problem.constraints])
    else:
        a = np.zeros((0, problem.num_vars))
        b = np.zeros(0)
    objective = problem.objective if problem.objective is not None else np.zeros(problem.num_vars)
    result = simplex.solve_lp(objective, a, b, problem.lower, problem.upper)
    if result.status == simplex.INFEASIBLE:
        return Infeasible()
    if result.status == simplex.UNBOUNDED:
        # cannot happen with finite boxes; retry as a pure feasibility problem
        result = simplex.solve_lp(np.zeros(problem.num_vars), a, b, problem.lower, problem.upper)
    return Witness(result.x)


def scipy_backend(problem: FeasibilityProblem) -> SolverOutcome:
    """HiGHS via scipy; needs the optional ``scipy`` extra."""
    try:
        from scipy.optimize import linprog
    except ImportError as exc:
        raise SolverError("the scipy backend needs scipy installed (pip install .[scipy])") from exc

    n = problem.num_vars
    a = [c.coeffs if c.relation == "<=" else -c.coeffs for c in problem.constraints]
    b = [c.rhs if c.relation == "<=" else -c.rhs for c in problem.constraints]
    res = linprog(
        problem.objective if problem.objective is not None else np.zeros(n),
        A_ub=np.array(a) if a else None,
        b_ub=np.array(b) if b else None,
        bounds=list(zip(problem.lower, problem.upper)),
        method="highs",
    )
    if res.status == 0:
        return Witness(np.clip(res.x, problem.lower, problem.upper))
    if res.status == 2:
        return Infeasible()
    return Unknown(f"highs status {res.status}: {res.message}")


BACKENDS: dict[str, Callable[[FeasibilityProblem], SolverOutcome]] = {
    "simplex": simplex_backend,
    "scipy": scipy_backend,
}
COMPLETE_BACKENDS = {"simplex"}


def register_backend(name: str, backend: Callable[[FeasibilityProblem], SolverOutcome]) -> None:
    BACKENDS[name] = backend


def default_backend_name() -> str:
    return os.environ.get(ENV_VAR, "simplex") or "simplex"


def _presolve(problem: FeasibilityProblem) -> FeasibilityProblem | None:
    """Drop constant constraints; ``None`` when one of them already fails."""
    kept = []
    for c in problem.constraints:
        if np.any(c.coeffs):
            kept.append(c)
        elif c.slack(np.zeros(problem.num_vars)) < 0:
            return None
    return FeasibilityProblem(problem.num_vars, problem.lower, problem.upper, kept, problem.objective, problem.label)


def solve_feasibility(problem: FeasibilityProblem, backend: str | None = None) -> SolverOutcome:
    """Decide whether ``problem`` has a solution, returning a checked witness if so."""
    name = backend or default_backend_name()
    try:
        solver = BACKENDS[name]
    except KeyError:
        raise SolverError(f"unknown solver backend {name!r}; registered: {sorted(BACKENDS)}") from None

    reduced = _presolve(problem)
    if reduced is None:
        return Infeasible()
    if not reduced.constraints and reduced.objective is None:
        outcome = Witness(np.clip(np.zeros(problem.num_vars), problem.lower, problem.upper))
    else:
        outcome = solver(reduced)

    if isinstance(outcome, Witness):
        failures = problem.violations(outcome.values)
        if failures:
            msg = f"{name} witness failed re-validation: {failures[:3]}"
            if name in COMPLETE_BACKENDS:
                raise SolverError(msg)
            return Unknown(msg)
    return outcome
