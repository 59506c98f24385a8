import json
from typing import Any, Dict

from ..errors import GridFormatError
from .grid import GeneratorSpec, GridModel, LineSpec
from .schema import GridSchema

_SCHEMA = GridSchema()


def _reject_constant(name: str) -> Any:
    raise GridFormatError(f"non-finite number '{name}' is not allowed")


def parse_grid(text: str) -> GridModel:
    r"""
    Parse a grid JSON document.

    Example::

        >>> grid = parse_grid(
        ...     '{"f0_hz": 50, "s_base_mva": 100, "load_buses": ["L1"], "lines": [],'
        ...     ' "generators": [{"id": "G1", "terminal": "L1", "h0_mws": 1000,'
        ...     ' "h_max_mws": 5000, "b_internal_pu": 10, "cost_per_mws": 1}]}'
        ... )
        >>> grid.n, grid.m
        (1, 1)

    Args:
        text (str): Content of the grid file.

    Raises:
        GridFormatError: On syntax errors (with line and column), unknown or missing
            keys, duplicate bus ids, non-positive susceptances or ``h0 > h_max``.
    """
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise GridFormatError(f"syntax error at line {e.lineno} column {e.colno}: {e.msg}") from e
    _SCHEMA.validate_document(doc)

    seen = set()

    def claim(bus: str) -> None:
        if bus in seen:
            raise GridFormatError(f"duplicate bus id '{bus}'")
        seen.add(bus)

    for bus in doc["load_buses"]:
        claim(bus)

    generators = []
    for g in doc["generators"]:
        claim(g["id"])
        if g["b_internal_pu"] <= 0:
            raise GridFormatError(f"non-positive susceptance {g['b_internal_pu']} on generator '{g['id']}'")
        if g["h0_mws"] < 0:
            raise GridFormatError(f"negative inertia {g['h0_mws']} on generator '{g['id']}'")
        if g["h0_mws"] > g["h_max_mws"]:
            raise GridFormatError(
                f"h0 ({g['h0_mws']}) exceeds h_max ({g['h_max_mws']}) on generator '{g['id']}'"
            )
        cost = g.get("cost_per_mws", 0.0)
        if cost < 0:
            raise GridFormatError(f"negative cost {cost} on generator '{g['id']}'")
        generators.append(
            GeneratorSpec(
                bus=g["id"],
                terminal=g["terminal"],
                h0=float(g["h0_mws"]),
                h_max=float(g["h_max_mws"]),
                internal_susceptance=float(g["b_internal_pu"]),
                cost_coeff=float(cost),
            )
        )

    lines = []
    for i, ln in enumerate(doc.get("lines", [])):
        if ln["b_pu"] <= 0:
            raise GridFormatError(f"non-positive susceptance {ln['b_pu']} on lines[{i}] ({ln['from']}-{ln['to']})")
        if ln["from"] == ln["to"]:
            raise GridFormatError(f"lines[{i}] connects bus '{ln['from']}' to itself")
        lines.append(LineSpec(from_bus=ln["from"], to_bus=ln["to"], susceptance=float(ln["b_pu"])))

    for key in ("f0_hz", "s_base_mva"):
        if doc[key] <= 0:
            raise GridFormatError(f"{key} must be positive, got {doc[key]}")

    return GridModel(
        f0=float(doc["f0_hz"]),
        s_base=float(doc["s_base_mva"]),
        generators=generators,
        load_buses=list(doc["load_buses"]),
        lines=lines,
    )


def _ordered(section: str, values: Dict[str, Any]) -> Dict[str, Any]:
    return {key: values[key] for key in _SCHEMA.key_order(section)}


def grid_to_dict(grid: GridModel) -> Dict[str, Any]:
    """Grid as a JSON-ready dict, keys in schema order."""
    generators = [
        _ordered(
            "generator",
            {
                "id": g.bus,
                "terminal": g.terminal,
                "h0_mws": g.h0,
                "h_max_mws": g.h_max,
                "b_internal_pu": g.internal_susceptance,
                "cost_per_mws": g.cost_coeff,
            },
        )
        for g in grid.generators
    ]
    lines = [_ordered("line", {"from": ln.from_bus, "to": ln.to_bus, "b_pu": ln.susceptance}) for ln in grid.lines]
    return _ordered(
        "grid",
        {
            "f0_hz": grid.f0,
            "s_base_mva": grid.s_base,
            "load_buses": list(grid.load_buses),
            "generators": generators,
            "lines": lines,
        },
    )


def serialize_grid(grid: GridModel) -> str:
    """Serialize a grid to its JSON document; ``parse_grid`` inverts it exactly."""
    return json.dumps(grid_to_dict(grid), indent=2, allow_nan=False) + "\n"
