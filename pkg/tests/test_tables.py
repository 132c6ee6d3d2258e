import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shearstab import tables

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(finite, min_size=1, max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, vals):
    p = tmp_path_factory.mktemp("csv") / "t.csv"
    tables.write_csv(p, ["v"], [[v] for v in vals])
    _, rows = tables.read_csv(p)
    assert [float(r[0]) for r in rows] == vals


def test_fmt_kinds():
    assert tables.fmt(True) == "1" and tables.fmt(np.int64(7)) == "7"
    assert tables.fmt(0.1) == "0.10000000000000001"


def test_osm_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    y = rng.random(50)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    p = tables.write_table(tmp_path / "f.osm", {"y": y, "psi": z}, {"nu": 1e-6})
    cols, meta = tables.read_table(p)
    assert np.array_equal(cols["y"], y) and np.array_equal(cols["psi"], z)
    assert meta == {"nu": 1e-6}


def test_osm_layout(tmp_path):
    p = tables.write_table(tmp_path / "f.osm", {"a": np.array([1.0, 2.0])})
    raw = p.read_bytes()
    assert raw[:4] == b"OSM1"
    (n,) = struct.unpack("<I", raw[4:8])
    assert np.frombuffer(raw[8 + n:], "<f8").tolist() == [1.0, 2.0]


def test_osm_rejects_bad_columns(tmp_path):
    with pytest.raises(ValueError):
        tables.write_table(tmp_path / "f.osm", {"a": np.zeros(3), "b": np.zeros(4)})
    with pytest.raises(ValueError):
        tables.write_table(tmp_path / "f.osm", {"a": np.zeros((2, 2))})
    (tmp_path / "bad.osm").write_bytes(b"NOPE")
    with pytest.raises(ValueError):
        tables.read_table(tmp_path / "bad.osm")
