"""Information-flow topologies of a platoon.

Vehicle 0 is the leader, vehicles 1..n are followers ordered front to back.
``M[i, j]`` is true when vehicle ``i`` receives the broadcast state of
vehicle ``j``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from platoon_fdi.errors import TopologyError


class TopologyKind(str, enum.Enum):
    PF = "PF"
    PLF = "PLF"
    TPF = "TPF"
    TPLF = "TPLF"
    CUSTOM = "Custom"

    @classmethod
    def parse(cls, text: str) -> "TopologyKind":
        key = text.strip().upper()
        for kind in cls:
            if kind.value.upper() == key:
                return kind
        raise ValueError(f"unknown topology kind {text!r} (expected PF, PLF, TPF, TPLF or Custom)")


@dataclass(frozen=True, eq=False)
class PlatoonTopology:
    kind: TopologyKind
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        validate_matrix(m, forward_only=self.kind is not TopologyKind.CUSTOM)

    @property
    def n(self) -> int:
        """Number of followers (leader excluded)."""
        return self.matrix.shape[0] - 1

    def neighbors(self, i: int) -> tuple[int, ...]:
        return neighbors(self, i)

    def __eq__(self, other):
        if not isinstance(other, PlatoonTopology):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.kind, self.matrix.tobytes()))


def validate_matrix(m: np.ndarray, forward_only: bool = False) -> None:
    """Raise :class:`TopologyError` naming the first violated invariant."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise TopologyError(f"adjacency matrix must be square, got shape {m.shape}")
    if m.shape[0] < 2:
        raise TopologyError("platoon needs a leader and at least one follower")
    diag = np.flatnonzero(np.diag(m))
    if diag.size:
        raise TopologyError(f"self edge at vehicle {diag[0]} (M[i][i] must be 0)")
    if m[0].any():
        raise TopologyError("leader row must be all zero (the leader receives from no one)")
    for i in range(1, m.shape[0]):
        if not m[i, i - 1]:
            raise TopologyError(f"follower {i} does not receive from its predecessor {i - 1}")
    if forward_only and np.triu(m).any():
        i, j = np.argwhere(np.triu(m))[0]
        raise TopologyError(f"edge {j}->{i} flows backwards (named topologies require j < i)")


def build_adjacency(kind: TopologyKind | str, n: int, matrix=None) -> PlatoonTopology:
    """Build the adjacency matrix of a named topology for ``n`` followers.

    For ``Custom`` the caller supplies ``matrix`` of shape ``(n+1, n+1)``.
    """
    if isinstance(kind, str):
        kind = TopologyKind.parse(kind)
    if kind is TopologyKind.CUSTOM:
        if matrix is None:
            raise TopologyError("Custom topology requires an explicit matrix")
        m = np.asarray(matrix)
        if m.shape != (n + 1, n + 1):
            raise TopologyError(f"Custom matrix has shape {m.shape}, expected {(n + 1, n + 1)}")
        if not np.isin(m, (0, 1)).all():
            raise TopologyError("Custom matrix entries must be 0 or 1")
        return PlatoonTopology(kind, m.astype(bool))
    if n < 1:
        raise TopologyError(f"need at least one follower, got n={n}")

    m = np.zeros((n + 1, n + 1), dtype=bool)
    for i in range(1, n + 1):
        m[i, i - 1] = True
        if kind in (TopologyKind.TPF, TopologyKind.TPLF) and i >= 2:
            m[i, i - 2] = True
        if kind in (TopologyKind.PLF, TopologyKind.TPLF):
            m[i, 0] = True
    return PlatoonTopology(kind, m)


def neighbors(topology: PlatoonTopology, i: int) -> tuple[int, ...]:
    """Vehicles whose state vehicle ``i`` receives, ascending."""
    if not 0 <= i <= topology.n:
        raise IndexError(f"vehicle index {i} out of range [0, {topology.n}]")
    return tuple(int(j) for j in np.flatnonzero(topology.matrix[i]))


def parse_matrix(text: str) -> np.ndarray:
    """Parse ``"0,0;1,0"`` (rows split by ``;``) into a 0/1 integer matrix."""
    rows = [r.strip() for r in text.strip().split(";") if r.strip()]
    if not rows:
        raise TopologyError("empty adjacency matrix")
    parsed = []
    for r, row in enumerate(rows):
        try:
            vals = [int(v) for v in row.split(",")]
        except ValueError:
            raise TopologyError(f"row {r}: entries must be integers 0/1, got {row!r}") from None
        parsed.append(vals)
    if len({len(r) for r in parsed}) != 1:
        raise TopologyError("adjacency matrix rows have different lengths")
    return np.array(parsed, dtype=int)


def format_matrix(topology: PlatoonTopology) -> str:
    return ";".join(",".join(str(int(v)) for v in row) for row in topology.matrix)
