from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

BusId = str


@dataclass(frozen=True)
class GeneratorSpec:
    r"""
    A generator modelled as an internal EMF node hanging off one load bus.

    Args:
        bus: Id of the internal generator node, e.g. ``"G1"``.
        terminal: Load bus the internal branch connects to.
        h0: Synchronous inertia in MW·s.
        h_max: Ceiling on total (synchronous plus virtual) inertia in MW·s.
        internal_susceptance: Reciprocal of the internal reactance, per-unit on ``s_base``.
        cost_coeff: Linear cost of virtual inertia per MW·s.
    """

    bus: BusId
    terminal: BusId
    h0: float
    h_max: float
    internal_susceptance: float
    cost_coeff: float = 0.0

    @property
    def headroom(self) -> float:
        """Largest virtual inertia award the ceiling allows."""
        return self.h_max - self.h0


@dataclass(frozen=True)
class LineSpec:
    from_bus: BusId
    to_bus: BusId
    susceptance: float

    @property
    def key(self) -> Tuple[BusId, BusId]:
        """Unordered bus pair; parallel lines share a key."""
        return tuple(sorted((self.from_bus, self.to_bus)))


@dataclass(frozen=True)
class GridModel:
    r"""
    An ``n``-generator ``m``-load network for the augmented DC power-flow model.

    Lines connect load buses only. Each generator couples to the network through
    its internal susceptance to exactly one terminal load bus; several generators
    may share a terminal.

    Example::

        >>> grid = GridModel(
        ...     f0=50.0,
        ...     s_base=100.0,
        ...     generators=[GeneratorSpec("G1", "L1", 500.0, 5000.0, 5.0, 1.0)],
        ...     load_buses=["L1"],
        ... )
        >>> grid.n, grid.m
        (1, 1)

    Args:
        f0: Nominal frequency in Hz.
        s_base: MVA base of the per-unit susceptances.
        generators: Generator specs, in row order of the generator blocks.
        load_buses: Load bus ids, in row order of the load blocks.
        lines: Load-to-load branches.
    """

    f0: float
    s_base: float
    generators: Tuple[GeneratorSpec, ...]
    load_buses: Tuple[BusId, ...]
    lines: Tuple[LineSpec, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        # accept lists at construction, store tuples
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "load_buses", tuple(self.load_buses))
        object.__setattr__(self, "lines", tuple(self.lines))

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def m(self) -> int:
        return len(self.load_buses)

    @property
    def gen_ids(self) -> Tuple[BusId, ...]:
        return tuple(g.bus for g in self.generators)

    @property
    def bus_ids(self) -> Tuple[BusId, ...]:
        """Generator buses followed by load buses."""
        return self.gen_ids + self.load_buses

    def generator(self, bus: BusId) -> GeneratorSpec:
        for gen in self.generators:
            if gen.bus == bus:
                return gen
        raise KeyError(f"Unknown generator '{bus}'.")

    def inertia(self, h_v: Optional[Sequence[float]] = None) -> Tuple[float, ...]:
        """Total inertia per generator in MW·s, optionally with virtual inertia awards added."""
        if h_v is None:
            return tuple(g.h0 for g in self.generators)
        assert len(h_v) == self.n, f"Expected {self.n} awards but found {len(h_v)}."
        return tuple(g.h0 + float(h) for g, h in zip(self.generators, h_v))

    def total_inertia(self, h_v: Optional[Sequence[float]] = None) -> float:
        return float(sum(self.inertia(h_v)))

    def cost_coeffs(self) -> Tuple[float, ...]:
        return tuple(g.cost_coeff for g in self.generators)

    def with_inertia(self, h_v: Sequence[float]) -> "GridModel":
        """Return a grid whose synchronous inertia includes the given awards."""
        h_n = self.inertia(h_v)
        generators = [replace(g, h0=h, h_max=max(g.h_max, h)) for g, h in zip(self.generators, h_n)]
        return replace(self, generators=generators)

    def without_generator(self, bus: BusId) -> "GridModel":
        self.generator(bus)
        return replace(self, generators=[g for g in self.generators if g.bus != bus])

    def aggregated_lines(self) -> Dict[Tuple[BusId, BusId], float]:
        """Line susceptance per unordered bus pair, parallel lines summed."""
        totals: Dict[Tuple[BusId, BusId], float] = {}
        for line in self.lines:
            totals[line.key] = totals.get(line.key, 0.0) + line.susceptance
        return totals
