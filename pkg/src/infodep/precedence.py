"""Conditional precedence relations, topological closure, and separation.

The precedence of agent b over agent a, conditioned on a context pair
(W, H), holds when a's information traced on H still depends on b's
decision even after every decision coordinate outside {b} plus W is made
visible.  Membership in the defining intersection is per-element, so the
relation is computed entry by entry ("drop b and test containment") without
enumerating all 2^|A| candidate sets; `precedes_oracle` keeps the literal
enumeration as an independent check.

Closures are least fixpoints of S -> S u P(S); a separation query searches
the 2^|W| splittings of W in canonical binary order for disjoint closures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from . import _kernels
from .fieldcore import (
    ConfigSet,
    CoordinateMask,
    FieldcoreError,
    field_subset_on,
)

if TYPE_CHECKING:  # pragma: no cover
    from .model import WModel

DEFAULT_ORACLE_MAX_AGENTS = 12


@dataclass(frozen=True)
class PrecedenceRelation:
    """Boolean relation on agents; entry (b, a) true means b precedes a."""

    agents: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=bool)
        n = len(self.agents)
        if m.shape != (n, n):
            raise FieldcoreError("relation matrix does not match the agent list")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def _idx(self, agent: str) -> int:
        return self.agents.index(agent)

    def _check_compatible(self, other: "PrecedenceRelation") -> None:
        if self.agents != other.agents:
            raise FieldcoreError("relations are indexed by different agents")

    def holds(self, b: str, a: str) -> bool:
        return bool(self.matrix[self._idx(b), self._idx(a)])

    def predecessors(self, a: str) -> frozenset[str]:
        col = self.matrix[:, self._idx(a)]
        return frozenset(b for b, bit in zip(self.agents, col) if bit)

    def foreset(self, agents: Iterable[str]) -> frozenset[str]:
        """P(B): all agents preceding some member of B."""
        cols = [self._idx(a) for a in agents]
        if not cols:
            return frozenset()
        rows = self.matrix[:, cols].any(axis=1)
        return frozenset(b for b, bit in zip(self.agents, rows) if bit)

    def converse(self) -> "PrecedenceRelation":
        return PrecedenceRelation(self.agents, self.matrix.T)

    def union(self, other: "PrecedenceRelation") -> "PrecedenceRelation":
        self._check_compatible(other)
        return PrecedenceRelation(self.agents, self.matrix | other.matrix)

    def compose(self, other: "PrecedenceRelation") -> "PrecedenceRelation":
        """(b, a) in self.compose(other) iff b self d and d other a for some d."""
        self._check_compatible(other)
        m = (self.matrix.astype(np.int8) @ other.matrix.astype(np.int8)) > 0
        return PrecedenceRelation(self.agents, m)

    def diagonal_restrict(self, keep: Iterable[str]) -> "PrecedenceRelation":
        """Delta_keep composed with self: clear every row outside `keep`."""
        keep = set(keep)
        m = self.matrix.copy()
        for i, b in enumerate(self.agents):
            if b not in keep:
                m[i, :] = False
        return PrecedenceRelation(self.agents, m)

    def transitive_closure(self) -> "PrecedenceRelation":
        m = self.matrix.copy()
        n = len(self.agents)
        for k in range(n):
            m |= np.outer(m[:, k], m[k, :])
        return PrecedenceRelation(self.agents, m)

    def reflexive_transitive_closure(self) -> "PrecedenceRelation":
        m = self.transitive_closure().matrix | np.eye(len(self.agents), dtype=bool)
        return PrecedenceRelation(self.agents, m)

    def __eq__(self, other):
        return (
            isinstance(other, PrecedenceRelation)
            and self.agents == other.agents
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.agents, self.matrix.tobytes()))

    def as_dict(self) -> dict[str, frozenset[str]]:
        return {a: self.predecessors(a) for a in self.agents}


@dataclass(frozen=True)
class Splitting:
    w_y: frozenset[str]
    w_z: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "w_y", frozenset(self.w_y))
        object.__setattr__(self, "w_z", frozenset(self.w_z))
        if self.w_y & self.w_z:
            raise FieldcoreError("splitting parts must be disjoint")


@dataclass(frozen=True)
class SeparationCertificate:
    splitting: Splitting
    closure_y: frozenset[str]
    closure_z: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "closure_y", frozenset(self.closure_y))
        object.__setattr__(self, "closure_z", frozenset(self.closure_z))
        if self.closure_y & self.closure_z:
            raise FieldcoreError("certificate closures must be disjoint")


def _as_agent_set(m: "WModel", agents: Iterable[str], what: str) -> frozenset[str]:
    s = frozenset(agents)
    unknown = s - set(m.agents)
    if unknown:
        raise FieldcoreError(f"{what} references unknown agents: {sorted(unknown)}")
    return s


def _context(m: "WModel", ctx: ConfigSet | None) -> ConfigSet:
    if ctx is None:
        return ConfigSet.full(m.space)
    if ctx.size == 0:
        raise FieldcoreError("context set is empty")
    return ctx


def precedes(m: "WModel", w: Iterable[str] = (), ctx: ConfigSet | None = None) -> PrecedenceRelation:
    """Precedence conditioned on (w, ctx), entry by entry.

    Entry (b, a) is set when a's field, traced on ctx, is NOT contained in
    the field generated by all nature plus the decisions of (A \\ {b}) u w.
    """
    w = _as_agent_set(m, w, "W")
    ctx = _context(m, ctx)
    agents = m.agents
    all_nature = frozenset(agents)
    members = ctx.indices
    atoms = {a: np.ascontiguousarray(m.info[a].partition.atom_index[members])
             for a in agents}
    matrix = np.zeros((len(agents), len(agents)), dtype=bool)
    for i, b in enumerate(agents):
        visible = (frozenset(agents) - {b}) | w
        codes, n_codes = m.space.mask_codes(CoordinateMask(all_nature, visible))
        codes = np.ascontiguousarray(codes[members])
        for j, a in enumerate(agents):
            ok, _, _ = _kernels.group_constant(codes, atoms[a], n_codes)
            matrix[i, j] = not ok
    return PrecedenceRelation(tuple(agents), matrix)


def precedes_oracle(
    m: "WModel",
    w: Iterable[str] = (),
    ctx: ConfigSet | None = None,
    max_agents: int = DEFAULT_ORACLE_MAX_AGENTS,
) -> PrecedenceRelation:
    """Literal intersection over all 2^|A| candidate sets B."""
    w = _as_agent_set(m, w, "W")
    ctx = _context(m, ctx)
    agents = list(m.agents)
    n = len(agents)
    if n > max_agents:
        raise FieldcoreError(f"oracle capped at {max_agents} agents (got {n})")
    all_nature = frozenset(agents)
    matrix = np.zeros((n, n), dtype=bool)
    for j, a in enumerate(agents):
        inter = set(agents)
        for bits in range(1 << n):
            b_set = frozenset(agents[k] for k in range(n) if bits >> k & 1)
            mask = CoordinateMask(all_nature, b_set | w)
            if field_subset_on(m.info[a].partition, mask, ctx):
                inter &= b_set
        for i, b in enumerate(agents):
            matrix[i, j] = b in inter
    return PrecedenceRelation(tuple(agents), matrix)


def closure(
    m: "WModel",
    b: Iterable[str],
    w: Iterable[str] = (),
    ctx: ConfigSet | None = None,
    relation: PrecedenceRelation | None = None,
) -> frozenset[str]:
    """Least superset of b closed under conditional predecessors."""
    b = _as_agent_set(m, b, "B")
    rel = relation if relation is not None else precedes(m, w, ctx)
    current = set(b)
    while True:
        grown = current | rel.foreset(current)
        if grown == current:
            return frozenset(current)
        current = grown


def is_closed(
    m: "WModel",
    b: Iterable[str],
    w: Iterable[str] = (),
    ctx: ConfigSet | None = None,
    relation: PrecedenceRelation | None = None,
) -> bool:
    b = _as_agent_set(m, b, "B")
    rel = relation if relation is not None else precedes(m, w, ctx)
    return rel.foreset(b) <= b


def is_open(
    m: "WModel",
    b: Iterable[str],
    w: Iterable[str] = (),
    ctx: ConfigSet | None = None,
    relation: PrecedenceRelation | None = None,
) -> bool:
    b = _as_agent_set(m, b, "B")
    return is_closed(m, frozenset(m.agents) - b, w, ctx, relation)


def topologically_separated(
    m: "WModel",
    y: Iterable[str],
    z: Iterable[str],
    w: Iterable[str] = (),
    ctx: ConfigSet | None = None,
    relation: PrecedenceRelation | None = None,
) -> SeparationCertificate | None:
    """Search the splittings of w for disjoint closures of y u w_y and z u w_z.

    Splittings are visited in increasing binary order over w sorted by the
    canonical agent order (bit k set sends the k-th element to the y side);
    the first success wins, so the result is deterministic.  Returns None
    when every splitting fails.
    """
    y = _as_agent_set(m, y, "Y")
    z = _as_agent_set(m, z, "Z")
    w = _as_agent_set(m, w, "W")
    if (y & z) or (y & w) or (z & w):
        raise FieldcoreError("Y, Z, W must be pairwise disjoint")
    rel = relation if relation is not None else precedes(m, w, ctx)
    # The closure of B is the foreset of the reflexive-transitive closure,
    # so one matrix closure serves every splitting.
    rstar = rel.reflexive_transitive_closure()
    w_sorted = [a for a in m.agents if a in w]
    for bits in range(1 << len(w_sorted)):
        w_y = frozenset(a for k, a in enumerate(w_sorted) if bits >> k & 1)
        w_z = w - w_y
        cl_y = rstar.foreset(y | w_y)
        cl_z = rstar.foreset(z | w_z)
        if not (cl_y & cl_z):
            return SeparationCertificate(Splitting(w_y, w_z), cl_y, cl_z)
    return None
