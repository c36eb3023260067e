"""Policies, closed-loop solution maps, solvability and causality checks.

A policy is a table from the atoms of its owner's information field to a
decision; totality of the table IS measurability, so every representable
policy is admissible.  Solving a profile enumerates, for every nature
point, the decision tuples that satisfy all closed-loop equations at once;
the model is solvable for that profile when each count is exactly one.

Causality follows Witsenhausen's configuration-ordering notion: an ordering
map is valid when, on every set of configurations sharing an ordering
prefix, the last agent's information events are measurable with respect to
nature plus the decisions of the earlier agents.  `find_causal_ordering`
searches for such a map by recursively splitting configuration cells, one
next-agent per measurable cell atom, with memoization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import _kernels
from .fieldcore import (
    ConfigSet,
    Configuration,
    CoordinateMask,
    FieldcoreError,
)
from .precedence import SeparationCertificate, closure as topo_closure

if TYPE_CHECKING:  # pragma: no cover
    from .model import WModel

DEFAULT_POLICY_ENUM_CAP = 200_000
DEFAULT_SOLVABILITY_BUDGET = 50_000
DEFAULT_SOLVABILITY_SAMPLES = 200


class UnsolvableProfileError(FieldcoreError):
    pass


class InvalidCertificateError(FieldcoreError):
    pass


@dataclass(frozen=True)
class Policy:
    """An admissible policy: one decision index per information-field atom."""

    owner: str
    table: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.table, dtype=np.int64)
        if t.ndim != 1:
            raise FieldcoreError("policy table must be one-dimensional")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    def decision_label(self, m: "WModel", cfg: Configuration) -> str:
        atom = m.info[self.owner].partition.atom_of(cfg)
        return m.decisions[self.owner].elements[int(self.table[atom])]

    def __eq__(self, other):
        return (
            isinstance(other, Policy)
            and self.owner == other.owner
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        return hash((self.owner, self.table.tobytes()))


@dataclass(frozen=True)
class PolicyProfile:
    policies: Mapping[str, Policy]

    def __post_init__(self):
        object.__setattr__(self, "policies", dict(self.policies))
        for a, pol in self.policies.items():
            if pol.owner != a:
                raise FieldcoreError(f"policy for {a!r} is owned by {pol.owner!r}")

    def __getitem__(self, agent: str) -> Policy:
        return self.policies[agent]

    @staticmethod
    def of(policies: Iterable[Policy]) -> "PolicyProfile":
        return PolicyProfile({p.owner: p for p in policies})


def _check_profile(m: "WModel", profile: PolicyProfile) -> None:
    if set(profile.policies) != set(m.agents):
        raise FieldcoreError("profile must contain exactly one policy per agent")
    for a in m.agents:
        atoms = m.info[a].partition.atom_count
        size = m.decisions[a].size
        t = profile[a].table
        if t.shape != (atoms,):
            raise FieldcoreError(f"policy table for {a!r} must have {atoms} entries")
        if t.size and (t.min() < 0 or t.max() >= size):
            raise FieldcoreError(f"policy for {a!r} uses out-of-range decisions")


def policy_count(m: "WModel", agent: str) -> int:
    return m.decisions[agent].size ** m.info[agent].partition.atom_count


class PolicyEnumeration:
    """All policies of one agent in canonical order (atom 0 varies fastest)."""

    def __init__(self, m: "WModel", agent: str, cap: int = DEFAULT_POLICY_ENUM_CAP):
        self.agent = agent
        self._atoms = m.info[agent].partition.atom_count
        self._size = m.decisions[agent].size
        self._count = policy_count(m, agent)
        if self._count > cap:
            raise FieldcoreError(
                f"{self._count} policies for {agent!r} exceeds the cap {cap};"
                " use sample_policies instead"
            )

    def __len__(self) -> int:
        return self._count

    def policy_at(self, k: int) -> Policy:
        table = np.empty(self._atoms, dtype=np.int64)
        for t in range(self._atoms):
            table[t] = k % self._size
            k //= self._size
        return Policy(self.agent, table)

    def __iter__(self) -> Iterator[Policy]:
        return (self.policy_at(k) for k in range(self._count))


def enumerate_policies(m: "WModel", agent: str,
                       cap: int = DEFAULT_POLICY_ENUM_CAP) -> PolicyEnumeration:
    return PolicyEnumeration(m, agent, cap)


def sample_policies(m: "WModel", agent: str, n: int, seed=0) -> list[Policy]:
    """n independent uniform policies; deterministic under the seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    atoms = m.info[agent].partition.atom_count
    size = m.decisions[agent].size
    draws = rng.integers(0, size, size=(n, atoms), dtype=np.int64)
    return [Policy(agent, draws[i]) for i in range(n)]


def sample_profiles(m: "WModel", n: int, seed=0) -> list[PolicyProfile]:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    per_agent = {a: sample_policies(m, a, n, rng) for a in m.agents}
    return [PolicyProfile({a: per_agent[a][i] for a in m.agents}) for i in range(n)]


@dataclass(frozen=True)
class SolutionMap:
    """Per-nature-point closed-loop solution counts and, where unique, the solution."""

    space: object
    counts: np.ndarray
    config_index: np.ndarray  # -1 where the count differs from one

    @property
    def solvable(self) -> bool:
        return bool(np.all(self.counts == 1))

    @property
    def n_omega(self) -> int:
        return self.counts.shape[0]

    def _omega_index(self, omega: Mapping[str, str]) -> int:
        idx, stride = 0, 1
        for a in self.space.agents:
            sp = self.space.nature[a]
            idx += sp.index(omega[a]) * stride
            stride *= sp.size
        return idx

    def multiplicity(self, omega: Mapping[str, str]) -> int:
        return int(self.counts[self._omega_index(omega)])

    def solution(self, omega: Mapping[str, str]) -> Configuration:
        c = int(self.config_index[self._omega_index(omega)])
        if c < 0:
            raise UnsolvableProfileError("no unique solution at this nature point")
        return self.space.config_at(c)


def _stacked_tables(m: "WModel", profile: PolicyProfile) -> tuple[np.ndarray, np.ndarray]:
    tables, offsets, off = [], [], 0
    for a in m.agents:
        offsets.append(off)
        tables.append(profile[a].table)
        off += profile[a].table.shape[0]
    return np.concatenate(tables), np.asarray(offsets, dtype=np.int64)


def solve(m: "WModel", profile: PolicyProfile) -> SolutionMap:
    """Count, for every nature point, the decision tuples solving u_a = policy_a(h)."""
    _check_profile(m, profile)
    atoms, uvals = m.kernel_arrays()
    tables, offsets = _stacked_tables(m, profile)
    counts, sol = _kernels.solve_counts(tables, offsets, atoms, uvals, m.space.n_omega)
    return SolutionMap(m.space, counts, sol)


@dataclass(frozen=True)
class SolvabilityVerdict:
    kind: str  # SOLVABLE_PROVED | UNSOLVABLE | UNKNOWN
    profiles_checked: int
    witness: PolicyProfile | None = None
    exhaustive: bool = False


def is_model_solvable(
    m: "WModel",
    budget: int = DEFAULT_SOLVABILITY_BUDGET,
    samples: int = DEFAULT_SOLVABILITY_SAMPLES,
    seed=0,
) -> SolvabilityVerdict:
    """Quantify solvability over policy profiles.

    Exhaustive (a proof either way) when the profile count fits the budget;
    otherwise seeded sampling, which can only return UNSOLVABLE or UNKNOWN.
    """
    total = 1
    for a in m.agents:
        total *= policy_count(m, a)
        if total > budget:
            break
    if total <= budget:
        atoms, uvals = m.kernel_arrays()
        all_tables, pol_offsets, off = [], [], 0
        n_pols, atom_counts = [], []
        for a in m.agents:
            enum = PolicyEnumeration(m, a, cap=budget)
            k = m.info[a].partition.atom_count
            size = m.decisions[a].size
            ks = np.arange(len(enum), dtype=np.int64)[:, None]
            powers = size ** np.arange(k, dtype=np.int64)[None, :]
            all_tables.append(((ks // powers) % size).ravel())
            pol_offsets.append(off)
            n_pols.append(len(enum))
            atom_counts.append(k)
            off += len(enum) * k
        bad = int(_kernels.scan_profiles(
            np.concatenate(all_tables),
            np.asarray(pol_offsets, dtype=np.int64),
            np.asarray(n_pols, dtype=np.int64),
            np.asarray(atom_counts, dtype=np.int64),
            atoms, uvals, m.space.n_omega, total,
        ))
        if bad < 0:
            return SolvabilityVerdict("SOLVABLE_PROVED", total, exhaustive=True)
        rest, pols = bad, {}
        for a in m.agents:
            k = rest % policy_count(m, a)
            rest //= policy_count(m, a)
            pols[a] = PolicyEnumeration(m, a, cap=budget).policy_at(k)
        return SolvabilityVerdict("UNSOLVABLE", bad + 1, PolicyProfile(pols), exhaustive=True)

    for i, profile in enumerate(sample_profiles(m, samples, seed)):
        if not solve(m, profile).solvable:
            return SolvabilityVerdict("UNSOLVABLE", i + 1, profile)
    return SolvabilityVerdict("UNKNOWN", samples)


# ---------------------------------------------------------------------------
# causality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CausalOrdering:
    """A total agent ordering per configuration (rows of agent indices)."""

    agents: tuple[str, ...]
    orders: np.ndarray  # (n_configs, n_agents) agent indices

    def __post_init__(self):
        o = np.ascontiguousarray(self.orders, dtype=np.int16)
        n = len(self.agents)
        if o.ndim != 2 or o.shape[1] != n:
            raise FieldcoreError("ordering array has the wrong shape")
        ref = np.arange(n, dtype=np.int16)
        if not np.all(np.sort(o, axis=1) == ref):
            raise FieldcoreError("each configuration ordering must be a bijection")
        o.flags.writeable = False
        object.__setattr__(self, "orders", o)

    @staticmethod
    def constant(m: "WModel", order: Sequence[str]) -> "CausalOrdering":
        if sorted(order) != sorted(m.agents):
            raise FieldcoreError("constant ordering must list every agent once")
        row = np.asarray([m.agents.index(a) for a in order], dtype=np.int16)
        return CausalOrdering(
            tuple(m.agents), np.tile(row, (m.space.n_configs, 1))
        )

    def ordering_at(self, index: int) -> tuple[str, ...]:
        return tuple(self.agents[int(k)] for k in self.orders[index])


@dataclass(frozen=True)
class CausalityCheck:
    ok: bool
    violating_prefix: tuple[str, ...] | None = None
    witness: tuple[Configuration, Configuration] | None = None


def check_causal_ordering(m: "WModel", phi: CausalOrdering) -> CausalityCheck:
    """Validate an ordering map against every nonempty ordering prefix.

    For a prefix kappa realized by phi, each event of the last agent's field,
    intersected with the prefix cell, must be generated by nature and the
    decisions of the earlier agents; the per-atom constancy scan below is
    exactly that containment.
    """
    if phi.agents != tuple(m.agents):
        raise FieldcoreError("ordering is indexed by different agents")
    space = m.space
    all_nature = frozenset(m.agents)
    for k in range(1, len(m.agents) + 1):
        prefixes, inverse = np.unique(phi.orders[:, :k], axis=0, return_inverse=True)
        inverse = inverse.ravel()
        for row in range(prefixes.shape[0]):
            kappa = tuple(m.agents[int(i)] for i in prefixes[row])
            in_cell = inverse == row
            last_atoms = m.info[kappa[-1]].partition.atom_index
            labeled = np.where(in_cell, last_atoms, -1)
            codes, n_codes = space.mask_codes(
                CoordinateMask(all_nature, frozenset(kappa[:-1]))
            )
            ok, i, j = _kernels.group_constant(codes, labeled, n_codes)
            if not ok:
                return CausalityCheck(
                    False, kappa, (space.config_at(int(i)), space.config_at(int(j)))
                )
    return CausalityCheck(True)


def find_causal_ordering(
    m: "WModel", max_agents: int = 5, max_configs: int = 4096
) -> CausalOrdering | None:
    """Search for a causal configuration-ordering; None when none exists.

    Cells of configurations are split recursively: within a cell, every atom
    of the nature-plus-ordered-decisions field must pick a single next agent
    whose information is constant on it.  Choices are explored in canonical
    agent order with memoization, so the search is exhaustive and the
    returned ordering deterministic.
    """
    n = len(m.agents)
    if n > max_agents:
        raise FieldcoreError(f"ordering search capped at {max_agents} agents")
    space = m.space
    if space.n_configs > max_configs:
        raise FieldcoreError(f"ordering search capped at {max_configs} configurations")
    atoms_of = {a: m.info[a].partition.atom_index for a in m.agents}
    all_nature = frozenset(m.agents)
    codes_cache: dict[frozenset, np.ndarray] = {}

    def codes_for(used: frozenset) -> np.ndarray:
        if used not in codes_cache:
            codes_cache[used], _ = space.mask_codes(CoordinateMask(all_nature, used))
        return codes_cache[used]

    memo: dict[tuple, tuple | None] = {}

    def search(members: np.ndarray, used: frozenset):
        if len(used) == n:
            return ()
        key = (used, members.tobytes())
        if key in memo:
            return memo[key]
        codes = codes_for(used)[members]
        plan = []
        feasible = True
        _, inverse = np.unique(codes, return_inverse=True)
        for g in range(int(inverse.max()) + 1 if inverse.size else 0):
            cell = members[inverse == g]
            chosen = None
            for b in m.agents:
                if b in used:
                    continue
                vals = atoms_of[b][cell]
                if np.all(vals == vals[0]):
                    sub = search(cell, used | {b})
                    if sub is not None:
                        chosen = (b, cell, sub)
                        break
            if chosen is None:
                feasible = False
                break
            plan.append(chosen)
        out = tuple(plan) if feasible else None
        memo[key] = out
        return out

    root = search(np.arange(space.n_configs, dtype=np.int64), frozenset())
    if root is None:
        return None
    orders = np.full((space.n_configs, n), -1, dtype=np.int16)
    pos = {a: i for i, a in enumerate(m.agents)}

    def fill(plan, depth):
        for b, cell, sub in plan:
            orders[cell, depth] = pos[b]
            fill(sub, depth + 1)

    fill(root, 0)
    return CausalOrdering(tuple(m.agents), orders)


# ---------------------------------------------------------------------------
# factorization of the solution map under a separation certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorizationCertificate:
    """The three blocks the solution map factors through."""

    y_block: frozenset[str]
    z_block: frozenset[str]
    residual: frozenset[str]


@dataclass(frozen=True)
class DependenceCheck:
    name: str
    passed: bool
    witness: tuple[dict, dict] | None = None  # two nature assignments


@dataclass(frozen=True)
class FactorizationReport:
    certificate: FactorizationCertificate
    checks: tuple[DependenceCheck, ...]
    vacuous: bool
    domain_size: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _omega_coord(space, agent: str, omega_indices: np.ndarray) -> np.ndarray:
    stride, size = 1, space.nature[agent].size
    for a in space.agents:
        if a == agent:
            break
        stride *= space.nature[a].size
    return (omega_indices // stride) % size


def verify_factorization(
    m: "WModel",
    profile: PolicyProfile,
    ctx: ConfigSet | None,
    cert: SeparationCertificate,
    y: Iterable[str],
    z: Iterable[str],
    w: Iterable[str],
) -> FactorizationReport:
    """Check the three functional dependencies of the solution-map split.

    On the nature points whose solution lands in ctx, the y-block decisions
    must be a function of (y-block noises, solved w_z decisions); dually for
    the z block; and the residual decisions a function of (residual noises,
    solved y+z block decisions).  Each check is exhaustive pairwise
    agreement, reported with a counterexample on failure.
    """
    y, z, w = frozenset(y), frozenset(z), frozenset(w)
    if cert.splitting.w_y | cert.splitting.w_z != w:
        raise InvalidCertificateError("splitting does not partition W")
    cl_y = topo_closure(m, y | cert.splitting.w_y, w, ctx)
    cl_z = topo_closure(m, z | cert.splitting.w_z, w, ctx)
    if cl_y != cert.closure_y or cl_z != cert.closure_z:
        raise InvalidCertificateError("certificate closures are not the true closures")
    if cl_y & cl_z:
        raise InvalidCertificateError("certificate closures overlap")

    sol = solve(m, profile)
    if not sol.solvable:
        raise UnsolvableProfileError("factorization requires a solvable profile")

    space = m.space
    residual = frozenset(m.agents) - cl_y - cl_z
    parts = FactorizationCertificate(cl_y, cl_z, residual)

    ctx = ctx if ctx is not None else ConfigSet.full(space)
    omega = np.arange(space.n_omega, dtype=np.int64)
    in_domain = ctx.member_mask[sol.config_index]
    omega = omega[in_domain]
    if omega.shape[0] == 0:
        return FactorizationReport(parts, (), vacuous=True, domain_size=0)

    sol_cfg = sol.config_index[in_domain]

    def u_of(agents: frozenset[str]) -> np.ndarray:
        cols = [space.coord_values(("u", a))[sol_cfg] for a in space.agents if a in agents]
        return np.stack(cols, axis=1) if cols else np.zeros((omega.shape[0], 0), np.int64)

    def om_of(agents: frozenset[str]) -> np.ndarray:
        cols = [_omega_coord(space, a, omega) for a in space.agents if a in agents]
        return np.stack(cols, axis=1) if cols else np.zeros((omega.shape[0], 0), np.int64)

    plan = (
        ("y-block", parts.y_block, cert.splitting.w_z),
        ("z-block", parts.z_block, cert.splitting.w_y),
        ("residual", parts.residual, parts.y_block | parts.z_block),
    )
    checks = []
    for name, block, seen_decisions in plan:
        keys = np.concatenate([om_of(block), u_of(seen_decisions)], axis=1)
        vals = u_of(block)
        _, inverse, first = _rows_factorized(keys)
        witness = None
        ref = vals[first[inverse]]
        bad = np.flatnonzero((ref != vals).any(axis=1))
        passed = bad.size == 0
        if not passed:
            j = int(bad[0])
            i = int(first[inverse[j]])
            witness = (
                space.omega_labels_at(int(omega[i])),
                space.omega_labels_at(int(omega[j])),
            )
        checks.append(DependenceCheck(name, passed, witness))
    return FactorizationReport(parts, tuple(checks), vacuous=False,
                               domain_size=int(omega.shape[0]))


def _rows_factorized(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factorize matrix rows: (unique, inverse, index-of-first-occurrence)."""
    if rows.shape[1] == 0:
        n = rows.shape[0]
        return rows[:1], np.zeros(n, dtype=np.int64), np.zeros(1, dtype=np.int64)
    uniq, first, inverse = np.unique(rows, axis=0, return_index=True, return_inverse=True)
    return uniq, inverse.ravel(), first
