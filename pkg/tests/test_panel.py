import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import write_csv
from tailcor.errors import DataError, InvalidInputError, ParseError, SchemaError
from tailcor.panel import NaPolicy, Panel, load_panel


def clean_rows(n, start=1):
    return [[f"2020-01-{d:02d}", 0.01 * d, -0.02 * d] for d in range(start, start + n)]


def test_date_header_example(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "A", "B"], clean_rows(5))
    panel = load_panel(p)
    assert panel.N == 2 and panel.T == 5
    assert panel.labels == ("A", "B")
    assert panel.dates[0] == "2020-01-01"
    assert panel.dropped_rows == 0
    np.testing.assert_array_equal(panel.column("B"), [-0.02 * d for d in range(1, 6)])


def test_nan_cell_is_named(tmp_path):
    rows = clean_rows(5)
    rows[2][2] = "NaN"
    p = write_csv(tmp_path / "p.csv", ["date", "A", "B"], rows)
    with pytest.raises(DataError) as info:
        load_panel(p)
    assert info.value.row == 3 and info.value.column == "B"
    assert "row 3" in str(info.value) and "'B'" in str(info.value)


@pytest.mark.parametrize("token", ["", "NA", "inf", "-inf", "null", "#N/A"])
def test_missing_tokens_rejected_by_default(tmp_path, token):
    rows = clean_rows(4)
    rows[1][1] = token
    with pytest.raises(DataError):
        load_panel(write_csv(tmp_path / "p.csv", ["date", "A", "B"], rows))


def test_drop_policy_counts_rows(tmp_path):
    rows = [[i, 0.1 * i, 0.2 * i] for i in range(100)]
    rows[41][2] = "nan"
    p = write_csv(tmp_path / "p.csv", ["t", "A", "B"], rows)
    panel = load_panel(p, na_policy=NaPolicy.DROP)
    assert panel.T == 99 and panel.dropped_rows == 1
    assert panel.labels == ("t", "A", "B")
    assert 41 not in panel.column("t")


def test_non_numeric_text_is_an_error_under_either_policy(tmp_path):
    rows = clean_rows(4)
    rows[3][1] = "abc"
    p = write_csv(tmp_path / "p.csv", ["date", "A", "B"], rows)
    for policy in NaPolicy.ALL:
        with pytest.raises(DataError, match="not a number"):
            load_panel(p, na_policy=policy)


def test_ragged_row_reports_line(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("date,A,B\n2020-01-01,1,2\n\n2020-01-02,3\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_panel(p)
    assert info.value.line == 4


def test_schema_errors(tmp_path):
    with pytest.raises(SchemaError, match="duplicate"):
        load_panel(write_csv(tmp_path / "a.csv", ["date", "A", "A"], clean_rows(3)))
    rows = clean_rows(3)
    rows[2][0] = rows[1][0]
    with pytest.raises(SchemaError, match="increasing"):
        load_panel(write_csv(tmp_path / "b.csv", ["date", "A", "B"], rows))
    with pytest.raises(SchemaError):
        load_panel(write_csv(tmp_path / "c.csv", ["date", "A", "B"], clean_rows(3)), date_column="when")


def test_bad_date_and_empty_file(tmp_path):
    rows = clean_rows(3)
    rows[1][0] = "01/02/2020"
    with pytest.raises(DataError):
        load_panel(write_csv(tmp_path / "a.csv", ["date", "A", "B"], rows))
    (tmp_path / "e.csv").write_text("\n\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_panel(tmp_path / "e.csv")
    with pytest.raises(InvalidInputError):
        load_panel(tmp_path / "missing.csv")
    with pytest.raises(InvalidInputError):
        load_panel(tmp_path / "e.csv", na_policy="impute")


def test_explicit_date_column_delimiter_and_bom(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("﻿A;Day;B\n1;2021-03-01;2\n3;2021-03-02;4\n", encoding="utf-8")
    panel = load_panel(p, date_column="Day", delimiter=";")
    assert panel.labels == ("A", "B")
    assert panel.dates == ("2021-03-01", "2021-03-02")
    np.testing.assert_array_equal(panel.data, [[1, 2], [3, 4]])


def test_no_date_column(tmp_path):
    panel = load_panel(write_csv(tmp_path / "p.csv", ["A", "B"], [[1, 2], [3, 4], [5, 6]]))
    assert panel.dates is None and panel.T == 3


def test_panel_selection():
    panel = Panel(("a", "b", "c"), np.arange(12.0).reshape(4, 3), ("d1", "d2", "d3", "d4"))
    sub = panel.select(["c", "a"])
    np.testing.assert_array_equal(sub.data, [[2, 0], [5, 3], [8, 6], [11, 9]])
    assert panel.rows(1, 3).dates == ("d2", "d3")
    with pytest.raises(SchemaError):
        panel.select(["z"])
    with pytest.raises(SchemaError):
        panel.column("z")
    with pytest.raises(InvalidInputError):
        Panel(("a",), np.array([[np.inf]]))


@given(st.lists(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=3), min_size=1, max_size=30))
def test_round_trip(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("rt") / "p.csv"
    write_csv(p, ["x", "y", "z"], [[repr(v) for v in r] for r in rows])
    np.testing.assert_array_equal(load_panel(p).data, np.array(rows))
