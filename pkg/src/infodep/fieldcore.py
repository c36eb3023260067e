"""Finite set/partition algebra for configuration spaces.

Every sigma-field handled by this package is a complete field over a finite
set, so it is stored as the partition of the configuration space into its
atoms: a single integer array mapping configuration index -> atom id.  All
field relations (subfield, trace, containment over a context set) reduce to
constancy checks of one labeling over the fibers of another.

Configurations are enumerated in a fixed mixed-radix order: nature
coordinates in agent order, then decision coordinates in agent order, the
first coordinate varying fastest.  Indices never leak through public,
serialized interfaces; coordinate tuples do.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels

DEFAULT_MAX_CONFIGS = 2 ** 24


class FieldcoreError(ValueError):
    pass


class SpaceMismatchError(FieldcoreError):
    pass


class EmptyContextError(FieldcoreError):
    pass


@dataclass(frozen=True)
class FiniteSpace:
    """A finite labeled set; the order of `elements` is canonical."""

    id: str
    elements: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(str(e) for e in self.elements))
        if len(self.elements) == 0:
            raise FieldcoreError(f"space {self.id!r} must have at least one element")
        if len(set(self.elements)) != len(self.elements):
            raise FieldcoreError(f"space {self.id!r} has duplicate element labels")

    @property
    def size(self) -> int:
        return len(self.elements)

    def index(self, label: str) -> int:
        try:
            return self.elements.index(label)
        except ValueError:
            raise FieldcoreError(f"label {label!r} not in space {self.id!r}") from None

    @staticmethod
    def binary(id: str) -> "FiniteSpace":
        return FiniteSpace(id, ("0", "1"))


@dataclass(frozen=True)
class CoordinateMask:
    """Which nature/decision coordinates a product field may see."""

    nature: frozenset[str] = frozenset()
    decision: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nature", frozenset(self.nature))
        object.__setattr__(self, "decision", frozenset(self.decision))

    def union(self, other: "CoordinateMask") -> "CoordinateMask":
        return CoordinateMask(self.nature | other.nature, self.decision | other.decision)

    def intersection(self, other: "CoordinateMask") -> "CoordinateMask":
        return CoordinateMask(self.nature & other.nature, self.decision & other.decision)

    def issubset(self, other: "CoordinateMask") -> bool:
        return self.nature <= other.nature and self.decision <= other.decision


@dataclass(frozen=True)
class ConfigSpace:
    """Product of per-agent nature and decision sets, with a size guard."""

    agents: tuple[str, ...]
    nature: Mapping[str, FiniteSpace]
    decisions: Mapping[str, FiniteSpace]
    max_configs: int = DEFAULT_MAX_CONFIGS

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "nature", dict(self.nature))
        object.__setattr__(self, "decisions", dict(self.decisions))
        if not self.agents:
            raise FieldcoreError("agent list must be nonempty")
        if len(set(self.agents)) != len(self.agents):
            raise FieldcoreError("duplicate agent ids")
        for m, kind in ((self.nature, "nature"), (self.decisions, "decision")):
            if set(m) != set(self.agents):
                raise FieldcoreError(f"{kind} coordinate keys must equal the agent set")
        total = 1
        for a in self.agents:
            total *= self.nature[a].size * self.decisions[a].size
            if total > self.max_configs:
                raise FieldcoreError(
                    f"configuration space exceeds the cap of {self.max_configs} points"
                )
        object.__setattr__(self, "_n_configs", total)

    # Coordinates are addressed as ("n", agent) / ("u", agent).

    @cached_property
    def coords(self) -> tuple[tuple[str, str], ...]:
        return tuple(("n", a) for a in self.agents) + tuple(("u", a) for a in self.agents)

    def coord_space(self, coord: tuple[str, str]) -> FiniteSpace:
        kind, agent = coord
        return self.nature[agent] if kind == "n" else self.decisions[agent]

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(self.coord_space(c).size for c in self.coords)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out, s = [], 1
        for size in self.sizes:
            out.append(s)
            s *= size
        return tuple(out)

    @property
    def n_configs(self) -> int:
        return self._n_configs

    @property
    def n_omega(self) -> int:
        n = 1
        for a in self.agents:
            n *= self.nature[a].size
        return n

    @cached_property
    def _coord_value_arrays(self) -> dict[tuple[str, str], np.ndarray]:
        idx = np.arange(self.n_configs, dtype=np.int64)
        out = {}
        for coord, size, stride in zip(self.coords, self.sizes, self.strides):
            arr = (idx // stride) % size
            arr.flags.writeable = False
            out[coord] = arr
        return out

    def coord_values(self, coord: tuple[str, str]) -> np.ndarray:
        """Value index of one coordinate for every configuration index."""
        return self._coord_value_arrays[coord]

    def validate_mask(self, mask: CoordinateMask) -> None:
        unknown = (mask.nature | mask.decision) - set(self.agents)
        if unknown:
            raise FieldcoreError(f"mask references unknown agents: {sorted(unknown)}")

    def mask_coords(self, mask: CoordinateMask) -> tuple[tuple[str, str], ...]:
        self.validate_mask(mask)
        return tuple(
            c for c in self.coords
            if (c[0] == "n" and c[1] in mask.nature) or (c[0] == "u" and c[1] in mask.decision)
        )

    def full_mask(self) -> CoordinateMask:
        return CoordinateMask(frozenset(self.agents), frozenset(self.agents))

    def mask_codes(self, mask: CoordinateMask) -> tuple[np.ndarray, int]:
        """Mixed-radix code of the masked coordinates, per configuration.

        Codes are dense in [0, prod(masked sizes)) and their numeric order
        equals the first-occurrence order under the canonical enumeration.
        """
        coords = self.mask_coords(mask)
        codes = np.zeros(self.n_configs, dtype=np.int64)
        stride = 1
        for c in coords:
            codes += self.coord_values(c) * stride
            stride *= self.coord_space(c).size
        return codes, stride

    def index_of(self, cfg: "Configuration") -> int:
        if cfg.space is not self and cfg.space != self:
            raise SpaceMismatchError("configuration belongs to a different space")
        idx = 0
        for coord, stride in zip(self.coords, self.strides):
            kind, agent = coord
            label = cfg.nature_part[agent] if kind == "n" else cfg.decision_part[agent]
            idx += self.coord_space(coord).index(label) * stride
        return idx

    def config_at(self, index: int) -> "Configuration":
        if not 0 <= index < self.n_configs:
            raise FieldcoreError(f"configuration index {index} out of range")
        nat, dec = {}, {}
        for coord, size, stride in zip(self.coords, self.sizes, self.strides):
            kind, agent = coord
            label = self.coord_space(coord).elements[(index // stride) % size]
            (nat if kind == "n" else dec)[agent] = label
        return Configuration(self, nat, dec)

    def omega_labels_at(self, omega_index: int) -> dict[str, str]:
        """Nature labels of one point of the nature product (omega block)."""
        out = {}
        rest = omega_index
        for a in self.agents:
            sp = self.nature[a]
            out[a] = sp.elements[rest % sp.size]
            rest //= sp.size
        return out


@dataclass(frozen=True)
class Configuration:
    """One point of the configuration space: full nature + decision tuples."""

    space: ConfigSpace
    nature_part: Mapping[str, str]
    decision_part: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "nature_part", dict(self.nature_part))
        object.__setattr__(self, "decision_part", dict(self.decision_part))
        for a in self.space.agents:
            for part, spaces, kind in (
                (self.nature_part, self.space.nature, "nature"),
                (self.decision_part, self.space.decisions, "decision"),
            ):
                if a not in part:
                    raise FieldcoreError(f"missing {kind} coordinate for agent {a!r}")
                if part[a] not in spaces[a].elements:
                    raise FieldcoreError(
                        f"{kind} value {part[a]!r} not in space of agent {a!r}"
                    )

    @property
    def index(self) -> int:
        return self.space.index_of(self)

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.space.agents == other.space.agents
            and self.nature_part == other.nature_part
            and self.decision_part == other.decision_part
        )

    def __hash__(self):
        return hash((
            self.space.agents,
            tuple(sorted(self.nature_part.items())),
            tuple(sorted(self.decision_part.items())),
        ))

    def __repr__(self):
        n = ",".join(f"{a}={self.nature_part[a]}" for a in self.space.agents)
        u = ",".join(f"{a}={self.decision_part[a]}" for a in self.space.agents)
        return f"(omega: {n} | u: {u})"


def _frozen_array(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    arr.flags.writeable = False
    return arr


def _frozen_bool(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=bool)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ConfigSet:
    """A subset of the configuration space, stored as a boolean mask."""

    space: ConfigSpace
    member_mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.member_mask)
        if mask.shape != (self.space.n_configs,):
            raise FieldcoreError("member mask has the wrong length")
        object.__setattr__(self, "member_mask", _frozen_bool(mask))

    @staticmethod
    def full(space: ConfigSpace) -> "ConfigSet":
        return ConfigSet(space, np.ones(space.n_configs, dtype=bool))

    @staticmethod
    def from_indices(space: ConfigSpace, indices: Iterable[int]) -> "ConfigSet":
        mask = np.zeros(space.n_configs, dtype=bool)
        mask[list(indices)] = True
        return ConfigSet(space, mask)

    @staticmethod
    def from_configs(space: ConfigSpace, configs: Iterable[Configuration]) -> "ConfigSet":
        return ConfigSet.from_indices(space, (space.index_of(c) for c in configs))

    @staticmethod
    def from_pins(space: ConfigSpace,
                  nature: Mapping[str, str] | None = None,
                  decision: Mapping[str, str] | None = None) -> "ConfigSet":
        """All configurations whose pinned coordinates take the given labels."""
        mask = np.ones(space.n_configs, dtype=bool)
        for part, kind in ((nature or {}, "n"), (decision or {}, "u")):
            for agent, label in part.items():
                if agent not in space.agents:
                    raise FieldcoreError(f"pin references unknown agent {agent!r}")
                sp = space.coord_space((kind, agent))
                mask &= space.coord_values((kind, agent)) == sp.index(label)
        return ConfigSet(space, mask)

    @cached_property
    def indices(self) -> np.ndarray:
        return _frozen_array(np.flatnonzero(self.member_mask))

    @property
    def size(self) -> int:
        return int(self.member_mask.sum())

    @property
    def is_full(self) -> bool:
        return bool(self.member_mask.all())

    def complement(self) -> "ConfigSet":
        return ConfigSet(self.space, ~self.member_mask)

    def intersection(self, other: "ConfigSet") -> "ConfigSet":
        _require_same_space(self.space, other.space)
        return ConfigSet(self.space, self.member_mask & other.member_mask)

    def contains_index(self, index: int) -> bool:
        return bool(self.member_mask[index])

    def __eq__(self, other):
        return (
            isinstance(other, ConfigSet)
            and self.space.agents == other.space.agents
            and np.array_equal(self.member_mask, other.member_mask)
        )

    def __hash__(self):
        return hash((self.space.agents, self.member_mask.tobytes()))


@dataclass(frozen=True)
class Partition:
    """A finite complete field, identified with its atom labeling.

    `atom_index[i]` is the atom of configuration i, or -1 outside `domain`
    (domain None means the full space).  Atom ids are canonical: contiguous
    from 0, numbered by first occurrence in enumeration order.
    """

    space: ConfigSpace
    atom_index: np.ndarray
    atom_count: int
    domain: ConfigSet | None = None

    def __post_init__(self):
        object.__setattr__(self, "atom_index", _frozen_array(self.atom_index))
        if self.atom_index.shape != (self.space.n_configs,):
            raise FieldcoreError("atom index array has the wrong length")

    @property
    def is_full_domain(self) -> bool:
        return self.domain is None or self.domain.is_full

    def domain_indices(self) -> np.ndarray:
        if self.domain is None:
            return np.arange(self.space.n_configs, dtype=np.int64)
        return self.domain.indices

    def atom_of(self, cfg: Configuration) -> int:
        atom = int(self.atom_index[self.space.index_of(cfg)])
        if atom < 0:
            raise FieldcoreError("configuration lies outside the partition domain")
        return atom

    def atom_members(self, atom: int) -> np.ndarray:
        return np.flatnonzero(self.atom_index == atom)

    def representatives(self) -> list[int]:
        """First configuration index of each atom, in atom order."""
        reps = [-1] * self.atom_count
        for i in self.domain_indices():
            a = int(self.atom_index[i])
            if reps[a] < 0:
                reps[a] = int(i)
        return reps

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and self.space.agents == other.space.agents
            and self.atom_count == other.atom_count
            and np.array_equal(self.atom_index, other.atom_index)
        )

    def __hash__(self):
        return hash((self.space.agents, self.atom_count, self.atom_index.tobytes()))


def _require_same_space(a: ConfigSpace, b: ConfigSpace) -> None:
    if a is not b and (a.agents != b.agents or a.sizes != b.sizes):
        raise SpaceMismatchError("operands live on different configuration spaces")


def _canonicalize(raw: np.ndarray, members: np.ndarray, n: int) -> tuple[np.ndarray, int]:
    """Relabel raw codes on `members` by first occurrence; -1 elsewhere."""
    out = np.full(n, -1, dtype=np.int64)
    sub = raw[members] if members.shape[0] != n else raw
    uniq, first, inverse = np.unique(sub, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.shape[0])
    out[members] = rank[inverse]
    return out, int(uniq.shape[0])


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def project(cfg: Configuration, mask: CoordinateMask) -> tuple[str, ...]:
    """Masked coordinate labels of a configuration, in canonical coordinate order."""
    space = cfg.space
    out = []
    for kind, agent in space.mask_coords(mask):
        out.append(cfg.nature_part[agent] if kind == "n" else cfg.decision_part[agent])
    return tuple(out)


def partition_from_mask(space: ConfigSpace, mask: CoordinateMask) -> Partition:
    """Field generated by the masked coordinates: atoms = joint level sets."""
    codes, n_codes = space.mask_codes(mask)
    return Partition(space, codes, n_codes)


def partition_from_observation(
    space: ConfigSpace,
    obs: Callable[[Configuration], object] | Sequence[object],
) -> Partition:
    """Field generated by an arbitrary total observation map (atoms = level sets)."""
    if callable(obs):
        labels = [obs(space.config_at(i)) for i in range(space.n_configs)]
    else:
        labels = list(obs)
        if len(labels) != space.n_configs:
            raise FieldcoreError("observation sequence has the wrong length")
    seen: dict[object, int] = {}
    raw = np.empty(space.n_configs, dtype=np.int64)
    for i, lab in enumerate(labels):
        raw[i] = seen.setdefault(lab, len(seen))
    return Partition(space, raw, len(seen))


def partition_from_codes(space: ConfigSpace, raw: np.ndarray | Sequence[int]) -> Partition:
    """Full-domain partition from an arbitrary integer labeling (canonicalized)."""
    raw = np.ascontiguousarray(raw, dtype=np.int64)
    if raw.shape != (space.n_configs,):
        raise FieldcoreError("code array has the wrong length")
    atom_index, count = _canonicalize(
        raw, np.arange(space.n_configs, dtype=np.int64), space.n_configs
    )
    return Partition(space, atom_index, count)


def refines(p: Partition, q: Partition) -> bool:
    """True iff every atom of p lies inside a single atom of q (q subfield of p)."""
    _require_same_space(p.space, q.space)
    if (p.domain is None) != (q.domain is None) or (
        p.domain is not None and p.domain != q.domain
    ):
        raise FieldcoreError("refinement compares partitions over the same domain")
    members = p.domain_indices()
    ok, _, _ = _kernels.group_constant(
        np.ascontiguousarray(p.atom_index[members]),
        np.ascontiguousarray(q.atom_index[members]),
        p.atom_count,
    )
    return bool(ok)


def trace(p: Partition, ctx: ConfigSet) -> Partition:
    """Trace field of p over a nonempty subset of configurations."""
    _require_same_space(p.space, ctx.space)
    if ctx.size == 0:
        raise EmptyContextError("trace over an empty configuration set")
    if p.domain is not None:
        if not np.all(p.domain.member_mask[ctx.indices]):
            raise FieldcoreError("trace context must lie inside the partition domain")
    atom_index, count = _canonicalize(p.atom_index, ctx.indices, p.space.n_configs)
    return Partition(p.space, atom_index, count, domain=ctx)


def field_subset_on(p: Partition, mask: CoordinateMask, ctx: ConfigSet) -> bool:
    """Is the trace of p on ctx contained in the trace of the mask field?

    Equivalently: configurations of ctx that agree on all masked coordinates
    always share a p-atom.
    """
    return field_subset_witness(p, mask, ctx) is None


def field_subset_witness(
    p: Partition, mask: CoordinateMask, ctx: ConfigSet
) -> tuple[Configuration, Configuration] | None:
    """None when contained; otherwise a pair of configurations in ctx that
    agree on the masked coordinates but sit in different p-atoms."""
    _require_same_space(p.space, ctx.space)
    if not p.is_full_domain:
        raise FieldcoreError("containment test expects a full-domain field")
    members = ctx.indices
    if members.shape[0] == 0:
        raise EmptyContextError("containment test over an empty context")
    codes, n_codes = p.space.mask_codes(mask)
    ok, i, j = _kernels.group_constant(
        np.ascontiguousarray(codes[members]),
        np.ascontiguousarray(p.atom_index[members]),
        n_codes,
    )
    if ok:
        return None
    return p.space.config_at(int(members[i])), p.space.config_at(int(members[j]))
