import pytest

from infodep import _kernels
from infodep.fieldcore import ConfigSet, ConfigSpace, CoordinateMask, FiniteSpace
from infodep.model import (
    InformationField,
    ModelMeta,
    Prior,
    WModel,
    builtin,
    dag_to_idm,
)
from infodep.dsep import random_dag


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Pay any JIT compilation once, before timed tests run.
    _kernels.warmup()


@pytest.fixture(scope="session")
def xor_model():
    return builtin("witsenhausen-xor")


@pytest.fixture(scope="session")
def jpcbh_model():
    return builtin("jpcbh")


@pytest.fixture(scope="session")
def kuh_model():
    return builtin("kuh")


@pytest.fixture(scope="session")
def common_cause_model():
    return builtin("common-cause")


@pytest.fixture(scope="session")
def tikka_model():
    return builtin("tikka-context")


@pytest.fixture(scope="session")
def spirtes_model():
    return builtin("spirtes-discrete")


def binary_spaces(agents):
    return (
        {a: FiniteSpace.binary(f"omega[{a}]") for a in agents},
        {a: FiniteSpace.binary(f"u[{a}]") for a in agents},
    )


def mutual_observation_model():
    """Two agents, each seeing only the other's decision (x = y, y = x)."""
    agents = ("a", "b")
    nature = {x: FiniteSpace(f"omega[{x}]", ("*",)) for x in agents}
    decisions = {x: FiniteSpace.binary(f"u[{x}]") for x in agents}
    space = ConfigSpace(agents, nature, decisions)
    info = {
        "a": InformationField.from_mask(space, "a", CoordinateMask(frozenset(), {"b"})),
        "b": InformationField.from_mask(space, "b", CoordinateMask(frozenset(), {"a"})),
    }
    return WModel(space, info, prior=Prior.uniform(space),
                  meta=ModelMeta(name="mutual-observation"))


def random_mask_model(rng, n_agents=None, local_noise=True, edge_prob=0.45):
    """Random binary model with mask fields (possibly cyclic)."""
    n = int(n_agents) if n_agents is not None else int(rng.integers(2, 6))
    agents = tuple(f"A{i}" for i in range(n))
    nature, decisions = binary_spaces(agents)
    space = ConfigSpace(agents, nature, decisions)
    info = {}
    for a in agents:
        seen_u = frozenset(b for b in agents if b != a and rng.random() < edge_prob)
        if local_noise:
            seen_n = frozenset({a})
        else:
            seen_n = frozenset(b for b in agents if rng.random() < 0.6) | {a}
        info[a] = InformationField.from_mask(space, a, CoordinateMask(seen_n, seen_u))
    return WModel(space, info, meta=ModelMeta(name="random-mask"))


def random_dag_model(rng, n=5, edge_prob=0.4):
    g = random_dag(n, edge_prob, rng)
    return dag_to_idm(g), g


def random_context(rng, space):
    """Full space, a pinned decision coordinate, or a random nonempty subset."""
    roll = rng.random()
    if roll < 0.5:
        return None
    if roll < 0.75:
        a = space.agents[int(rng.integers(len(space.agents)))]
        lab = space.decisions[a].elements[int(rng.integers(space.decisions[a].size))]
        return ConfigSet.from_pins(space, decision={a: lab})
    mask = rng.random(space.n_configs) < 0.5
    if not mask.any():
        mask[int(rng.integers(space.n_configs))] = True
    return ConfigSet(space, mask)


def random_disjoint_sets(rng, agents, want_w=True):
    """Random disjoint (Y, Z, W) with nonempty Y and Z."""
    agents = list(agents)
    rng.shuffle(agents)
    ny = 1 + int(rng.integers(0, 2)) if len(agents) >= 4 else 1
    nz = 1
    y = frozenset(agents[:ny])
    z = frozenset(agents[ny:ny + nz])
    rest = agents[ny + nz:]
    if want_w and rest:
        nw = int(rng.integers(0, len(rest) + 1))
        w = frozenset(rest[:nw])
    else:
        w = frozenset()
    return y, z, w
