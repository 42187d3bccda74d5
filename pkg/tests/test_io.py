import json

import numpy as np
from hypothesis import given, strategies as st

from floquet_defect.io import fmt, render, to_csv, to_json


def test_fmt_values():
    assert fmt(None) == ""
    assert fmt(True) == "true"
    assert fmt(np.bool_(False)) == "false"
    assert fmt(3) == "3"
    assert fmt(np.int64(7)) == "7"
    assert fmt(0.1) == "0.1"
    assert fmt(np.float64(1 / 3)) == "0.3333333333333333"
    assert fmt(float("nan")) == "nan"
    assert fmt("gap") == "gap"


@given(st.floats(allow_nan=False))
def test_float_round_trip(x):
    assert float(fmt(x)) == x


def test_csv_layout():
    text = to_csv([{"a": 1.5, "b": None}, {"a": 2.0, "b": "x"}])
    assert text == "a,b\n1.5,\n2.0,x\n"
    assert to_csv([]) == ""


def test_json_drops_missing_and_splits_complex():
    rows = [{"k": np.float64(1.25), "theta0": None, "z": 1 + 2j}]
    assert json.loads(to_json(rows)) == [{"k": 1.25, "z": [1.0, 2.0]}]
    assert render(rows, "json") == to_json(rows)
    assert render(rows, "csv") == to_csv(rows)
