import json
import os

import pytest
from conftest import make_star_grid
from hypothesis import given, settings
from hypothesis import strategies as st

from rocofd.data import (
    GeneratorSpec,
    GridModel,
    GridSchema,
    LineSpec,
    grid_to_dict,
    parse_grid,
    read_grid_file,
    read_grid_files,
    serialize_grid,
)
from rocofd.errors import GridFormatError

STAR_JSON = """{
  "f0_hz": 50,
  "s_base_mva": 100,
  "load_buses": ["L1"],
  "generators": [
    {"id": "G1", "terminal": "L1", "h0_mws": 500, "h_max_mws": 5000, "b_internal_pu": 5, "cost_per_mws": 1},
    {"id": "G2", "terminal": "L1", "h0_mws": 2000, "h_max_mws": 5000, "b_internal_pu": 10, "cost_per_mws": 1}
  ],
  "lines": []
}
"""


def test_parse_star(star_grid):
    grid = parse_grid(STAR_JSON)
    assert grid == star_grid
    assert grid.n == 2 and grid.m == 1
    assert grid.bus_ids == ("G1", "G2", "L1")


def test_optional_keys_default():
    doc = json.loads(STAR_JSON)
    del doc["lines"]
    del doc["generators"][0]["cost_per_mws"]
    grid = parse_grid(json.dumps(doc))
    assert grid.lines == ()
    assert grid.generators[0].cost_coeff == 0.0


def test_syntax_error_has_position():
    with pytest.raises(GridFormatError, match=r"syntax error at line 3 column"):
        parse_grid('{\n  "f0_hz": 50,\n  "s_base_mva" 100\n}')


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d["generators"][1].update(id="L1"), "duplicate bus id 'L1'"),
        (lambda d: d["generators"][0].update(b_internal_pu=0), "non-positive susceptance"),
        (lambda d: d["generators"][0].update(h0_mws=6000), "exceeds h_max"),
        (lambda d: d["generators"][0].update(h0_mws=-1), "negative inertia"),
        (lambda d: d["generators"][0].update(cost_per_mws=-1), "negative cost"),
        (lambda d: d["generators"][0].update(foo=1), "unknown key 'foo'"),
        (lambda d: d["generators"][0].pop("terminal"), "missing required field 'terminal'"),
        (lambda d: d["generators"][0].update(h0_mws="500"), "must be a number"),
        (lambda d: d["generators"][0].update(h_max_mws=10**400), "h_max_mws is out of range"),
        (lambda d: d.update(f0_hz=0), "f0_hz must be positive"),
        (
            lambda d: d.update(load_buses=["L1", "L2"], lines=[{"from": "L1", "to": "L2", "b_pu": -2}]),
            "lines\\[0\\]",
        ),
        (lambda d: d.update(load_buses=["L1"], lines=[{"from": "L1", "to": "L1", "b_pu": 2}]), "to itself"),
    ],
)
def test_parse_errors(mutate, message):
    doc = json.loads(STAR_JSON)
    mutate(doc)
    with pytest.raises(GridFormatError, match=message):
        parse_grid(json.dumps(doc))


def test_non_finite_rejected():
    with pytest.raises(GridFormatError, match="non-finite"):
        parse_grid(STAR_JSON.replace('"h0_mws": 500', '"h0_mws": NaN'))


def test_schema_key_order(chain_grid):
    schema = GridSchema()
    assert schema.key_order("line") == ["from", "to", "b_pu"]
    doc = json.loads(serialize_grid(chain_grid))
    assert list(doc) == schema.key_order("grid")
    assert list(doc["generators"][0]) == schema.key_order("generator")
    assert list(doc["lines"][0]) == schema.key_order("line")
    with pytest.raises(GridFormatError, match="missing required field 's_base_mva'"):
        schema.validate_document({"f0_hz": 50.0})


def test_serialize_is_canonical(star_grid):
    text = serialize_grid(star_grid)
    assert text.endswith("}\n")
    assert serialize_grid(parse_grid(text)) == text
    assert json.loads(text) == grid_to_dict(star_grid)


positive = st.floats(min_value=1e-3, max_value=1e4, allow_nan=False, allow_infinity=False)


@st.composite
def grids(draw):
    m = draw(st.integers(min_value=1, max_value=4))
    loads = [f"L{j}" for j in range(m)]
    generators = []
    for i in range(draw(st.integers(min_value=1, max_value=3))):
        h0 = draw(positive)
        generators.append(
            GeneratorSpec(
                f"G{i}",
                draw(st.sampled_from(loads)),
                h0=h0,
                h_max=h0 + draw(positive),
                internal_susceptance=draw(positive),
                cost_coeff=draw(st.floats(min_value=0, max_value=100)),
            )
        )
    lines = [LineSpec(loads[j - 1], loads[j], draw(positive)) for j in range(1, m)]
    return GridModel(f0=draw(positive), s_base=draw(positive), generators=generators, load_buses=loads, lines=lines)


@settings(max_examples=50, deadline=None)
@given(grids())
def test_serialize_parse_identity(grid):
    assert parse_grid(serialize_grid(grid)) == grid


def test_grid_helpers(star_grid):
    assert star_grid.total_inertia() == 2500.0
    assert star_grid.total_inertia([750.0, 500.0]) == 3750.0
    raised = star_grid.with_inertia([750.0, 500.0])
    assert raised.inertia() == (1250.0, 2500.0)
    assert star_grid.inertia() == (500.0, 2000.0)
    reduced = star_grid.without_generator("G1")
    assert reduced.gen_ids == ("G2",)
    with pytest.raises(KeyError):
        star_grid.without_generator("G9")
    assert make_star_grid(h_max_1=1000.0).generator("G1").headroom == 500.0


def test_parallel_lines_aggregate():
    grid = GridModel(
        f0=50.0,
        s_base=100.0,
        generators=[GeneratorSpec("G1", "L1", 1000.0, 2000.0, 10.0)],
        load_buses=["L1", "L2"],
        lines=[LineSpec("L1", "L2", 1.0), LineSpec("L2", "L1", 2.5)],
    )
    assert grid.aggregated_lines() == {("L1", "L2"): 3.5}


def test_read_grid_files(tmp_path):
    for i in range(3):
        with open(os.path.join(tmp_path, f"star.{i:03d}.json"), "w", encoding="utf-8") as f:
            f.write(STAR_JSON)

    grid = read_grid_file("file://" + os.path.join(tmp_path, "star.000.json"))
    assert grid.gen_ids == ("G1", "G2")
    loaded = read_grid_files(str(os.path.join(tmp_path, "star.{000..002}.json")))
    assert len(loaded) == 3
    assert all(g == grid for g in loaded)


class _Blob:
    def __init__(self, store, name):
        self.store = store
        self.name = name

    def download_as_bytes(self):
        return self.store[self.name]


class _Bucket:
    def __init__(self, store):
        self.store = store

    def blob(self, name):
        return _Blob(self.store, name)


class _StorageClient:
    def __init__(self, buckets):
        self.buckets = buckets

    def bucket(self, name):
        return _Bucket(self.buckets[name])


def test_read_grid_gcs():
    client = _StorageClient({"grids": {"cases/star.json": STAR_JSON.encode("utf-8")}})
    grid = read_grid_file("gs://grids/cases/star.json", storage_client=client)
    assert grid == parse_grid(STAR_JSON)
