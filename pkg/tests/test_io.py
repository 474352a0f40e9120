import io as _io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zigzag import io, model

GOOD = """# a 2-d target
2
0.5 -1
2 0.5
0.5 1
+1 *
"""


def test_parse_target():
    tg = io.parse_target(GOOD)
    np.testing.assert_array_equal(tg.mean, [0.5, -1.0])
    np.testing.assert_array_equal(tg.precision.to_dense(), [[2.0, 0.5], [0.5, 1.0]])
    np.testing.assert_array_equal(tg.orthant, [1, 0])


@pytest.mark.parametrize(
    "text,match",
    [
        ("", "empty"),
        ("x\n", "not an integer"),
        ("2 3\n", "dimension only"),
        ("2\n0 0\n1 0\n0 1\n", "non-comment lines"),
        ("2\n0\n1 0\n0 1\n* *\n", "line 2"),
        ("2\n0 0\n1 0\n0 a\n* *\n", "line 4"),
        ("2\n0 0\n1 0\n0 1\n* 2\n", "orthant token"),
        ("2\n0 0\n1 2\n2 1\n* *\n", "positive definite"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(io.TargetFileError, match=match):
        io.parse_target(text)


def test_save_load_round_trip(tmp_path):
    tg = model.ar1_target(5, 0.7, orthant=[1, -1, 0, 0, 1])
    path = tmp_path / "t.txt"
    io.save_target(path, tg)
    back = io.load_target(path)
    np.testing.assert_array_equal(back.precision.to_dense(), tg.precision.to_dense())
    np.testing.assert_array_equal(back.orthant, tg.orthant)
    np.testing.assert_array_equal(back.mean, tg.mean)


def test_format_value():
    assert io.format_value(3) == "3"
    assert io.format_value(np.int64(7)) == "7"
    assert io.format_value(True) == "1"
    assert io.format_value(0.1) == "0.10000000000000001"
    assert io.format_value(float("inf")) == "inf"
    assert io.format_value("pc") == "pc"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(values):
    buf = _io.StringIO()
    io.write_csv(buf, ["k", "value"], [[k, v] for k, v in enumerate(values)])
    header, rows = io.read_csv(buf.getvalue())
    assert header == ["k", "value"]
    assert [r[1] for r in rows] == [float(v) for v in values]
    again = _io.StringIO()
    io.write_csv(again, header, rows)
    assert again.getvalue() == buf.getvalue()


def test_array_writer_matches_row_writer(tmp_path):
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((30, 3)) * 10.0 ** rng.integers(-20, 20, (30, 3))
    vals[0, 0], vals[1, 1] = -0.0, np.inf
    ints = np.column_stack([np.zeros(30, dtype=int), np.arange(30), rng.integers(0, 10**9, 30)])
    header = ["replicate", "sample", "events", "a", "b", "c"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    io.write_csv(a, header, ([*map(int, i), *v] for i, v in zip(ints, vals)))
    io.write_array_csv(b, header, np.column_stack([ints, vals]))
    assert a.read_bytes() == b.read_bytes()
    with pytest.raises(ValueError):
        io.write_array_csv(b, header, vals)
