import math
from typing import Any, List, Mapping

from ..errors import GridFormatError


class GridSchema:
    r"""
    Reference key sets for the grid JSON document.

    Validate decoded documents against the reference keys and value kinds before
    they are turned into a :class:`GridModel`.

    Example::

        >>> schema = GridSchema()
        >>> schema.validate_document({"f0_hz": 50.0})
        Traceback (most recent call last):
        ...
        rocofd.errors.GridFormatError: missing required field 's_base_mva' in grid

    Each entry of ``attrs`` maps a section to its required keys; ``optional``
    lists keys that may be omitted.
    """

    attrs = {
        "grid": ["f0_hz", "s_base_mva", "load_buses", "generators", "lines"],
        "generator": ["id", "terminal", "h0_mws", "h_max_mws", "b_internal_pu", "cost_per_mws"],
        "line": ["from", "to", "b_pu"],
    }
    optional = {
        "grid": ["lines"],
        "generator": ["cost_per_mws"],
        "line": [],
    }
    numbers = {
        "grid": ["f0_hz", "s_base_mva"],
        "generator": ["h0_mws", "h_max_mws", "b_internal_pu", "cost_per_mws"],
        "line": ["b_pu"],
    }
    strings = {
        "grid": [],
        "generator": ["id", "terminal"],
        "line": ["from", "to"],
    }

    def validate_document(self, doc: Any) -> None:
        """Validate the decoded document has the grid layout."""

        self._validate_section("grid", doc, "grid")
        if not isinstance(doc["load_buses"], list):
            raise GridFormatError("'load_buses' must be a list of bus ids")
        for i, bus in enumerate(doc["load_buses"]):
            if not isinstance(bus, str) or not bus:
                raise GridFormatError(f"load_buses[{i}] must be a non-empty string")
        for section, key in (("generator", "generators"), ("line", "lines")):
            items = doc.get(key, [])
            if not isinstance(items, list):
                raise GridFormatError(f"'{key}' must be a list")
            for i, item in enumerate(items):
                self._validate_section(section, item, f"{key}[{i}]")

    def _validate_section(self, section: str, value: Any, where: str) -> None:
        if not isinstance(value, Mapping):
            raise GridFormatError(f"{where} must be an object")
        unknown = sorted(set(value) - set(self.attrs[section]))
        if unknown:
            raise GridFormatError(f"unknown key '{unknown[0]}' in {where}")
        for key in self.attrs[section]:
            if key not in value and key not in self.optional[section]:
                raise GridFormatError(f"missing required field '{key}' in {where}")
        for key in self.numbers[section]:
            if key in value:
                _check_number(value[key], f"{where}.{key}")
        for key in self.strings[section]:
            if not isinstance(value[key], str) or not value[key]:
                raise GridFormatError(f"{where}.{key} must be a non-empty string")

    def key_order(self, section: str) -> List[str]:
        return list(self.attrs[section])


def _check_number(value: Any, where: str) -> None:
    # bool is an int subclass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise GridFormatError(f"{where} must be a number, got {value!r}")
    try:
        number = float(value)
    except OverflowError:
        raise GridFormatError(f"{where} is out of range") from None
    if not math.isfinite(number):
        raise GridFormatError(f"{where} must be finite, got {value!r}")
