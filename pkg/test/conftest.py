import numpy as np
import pytest

from rocofd.data import GeneratorSpec, GridModel, LineSpec


def make_star_grid(h_max_1: float = 5000.0) -> GridModel:
    return GridModel(
        f0=50.0,
        s_base=100.0,
        generators=[
            GeneratorSpec("G1", "L1", h0=500.0, h_max=h_max_1, internal_susceptance=5.0, cost_coeff=1.0),
            GeneratorSpec("G2", "L1", h0=2000.0, h_max=5000.0, internal_susceptance=10.0, cost_coeff=1.0),
        ],
        load_buses=["L1"],
    )


def random_grid(
    rng: np.random.Generator,
    n_max: int = 10,
    m_max: int = 40,
    b_range=(0.1, 50.0),
    h_range=(100.0, 10000.0),
    headroom=(1000.0, 5000.0),
) -> GridModel:
    """A random connected grid: a random spanning tree on the load buses plus extra lines."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    loads = [f"L{j + 1}" for j in range(m)]
    lines = [LineSpec(loads[j], loads[int(rng.integers(0, j))], float(rng.uniform(*b_range))) for j in range(1, m)]
    if m > 1:
        for _ in range(int(rng.integers(0, m + 1))):
            a, z = rng.choice(m, size=2, replace=False)
            lines.append(LineSpec(loads[a], loads[z], float(rng.uniform(*b_range))))
    generators = []
    for i in range(n):
        h0 = float(rng.uniform(*h_range))
        generators.append(
            GeneratorSpec(
                f"G{i + 1}",
                loads[int(rng.integers(0, m))],
                h0=h0,
                h_max=h0 + float(rng.uniform(*headroom)),
                internal_susceptance=float(rng.uniform(*b_range)),
                cost_coeff=float(rng.uniform(0.5, 2.0)),
            )
        )
    return GridModel(f0=50.0, s_base=100.0, generators=generators, load_buses=loads, lines=lines)


@pytest.fixture
def star_grid():
    # G1 and G2 behind different internal susceptances on one load bus
    return make_star_grid()


@pytest.fixture
def chain_grid():
    # G1 - L1 - L2 - G2
    return GridModel(
        f0=50.0,
        s_base=100.0,
        generators=[
            GeneratorSpec("G1", "L1", h0=1000.0, h_max=5000.0, internal_susceptance=10.0, cost_coeff=1.0),
            GeneratorSpec("G2", "L2", h0=1000.0, h_max=5000.0, internal_susceptance=10.0, cost_coeff=1.0),
        ],
        load_buses=["L1", "L2"],
        lines=[LineSpec("L1", "L2", 2.0)],
    )


@pytest.fixture
def single_grid():
    return GridModel(
        f0=50.0,
        s_base=100.0,
        generators=[GeneratorSpec("G1", "L1", h0=1000.0, h_max=5000.0, internal_susceptance=10.0, cost_coeff=1.0)],
        load_buses=["L1"],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1465)
