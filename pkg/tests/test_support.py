import tempfile
from pathlib import Path

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

from tarma_lm._parallel import chunked, pmap
from tarma_lm.exceptions import InvalidSpecError, TableFormatError
from tarma_lm.rng import child_seed, stream
from tarma_lm.series import TimeSeries, percentile_band, read_series_csv, write_series_csv


def test_streams_are_keyed():
    a = stream(1, 2, 3).standard_normal(4)
    npt.assert_array_equal(a, stream(1, 2, 3).standard_normal(4))
    assert not np.array_equal(a, stream(1, 3, 2).standard_normal(4))
    assert child_seed(1, 2) == child_seed(1, 2) != child_seed(1, 3)


def test_bad_seed():
    with pytest.raises(ValueError):
        stream(-1)


@given(st.integers(0, 500), st.integers(1, 50))
def test_chunked_partitions(n, size):
    parts = chunked(n, size)
    assert [i for r in parts for i in r] == list(range(n))


def test_pmap_keeps_order():
    assert pmap(abs, [-3, 2, -1], threads=2) == [3, 2, 1]


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
def test_series_csv_round_trip(values):
    s = TimeSeries(values)
    assert read_series_csv_text(write_series_csv(s)) == s


def read_series_csv_text(text):
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "s.csv"
        p.write_text(text)
        return read_series_csv(p)


def test_dated_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("date,value\n2020-01-01,1.5\n2020-01-02,2.5\n")
    s = read_series_csv(p)
    assert s.labels == ("2020-01-01", "2020-01-02")
    npt.assert_array_equal(s.values, [1.5, 2.5])
    assert read_series_csv_text(write_series_csv(s)) == s


def test_series_validation(tmp_path):
    with pytest.raises(InvalidSpecError):
        TimeSeries([])
    with pytest.raises(InvalidSpecError):
        TimeSeries([1.0, np.inf])
    with pytest.raises(InvalidSpecError):
        TimeSeries([1.0, 2.0], ("2020-01-02", "2020-01-01"))
    p = tmp_path / "bad.csv"
    p.write_text("value\n1\nabc\n")
    with pytest.raises(TableFormatError, match="line 3"):
        read_series_csv(p)


def test_percentile_band_is_type7():
    x = np.arange(11.0)
    assert percentile_band(x, 0.25, 0.75) == (2.5, 7.5)
