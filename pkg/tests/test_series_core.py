import numpy as np
import pytest

from errors import ArgumentError, DegenerateSeriesError, InsufficientDataError, NoOverlapError
from series_core import (
    Forecast,
    TimeSeries,
    align_panel,
    difference,
    difference_pivots,
    integrate,
    sample_acf,
)


def test_difference_examples():
    x = TimeSeries(2000, [1, 3, 6, 10])
    assert difference(x, 1).values.tolist() == [2, 3, 4]
    assert difference(x, 1).start_year == 2001
    assert difference(x, 2).values.tolist() == [1, 1]
    assert difference(x, 0).equals(x)


def test_difference_is_linear(rng):
    x = rng.normal(size=40) * 5.0
    y = np.cumsum(rng.normal(size=40))
    a, b = 2.5, -0.7
    for d in range(3):
        combined = difference(TimeSeries(2000, a * x + b * y), d).values
        separate = a * difference(TimeSeries(2000, x), d).values + b * difference(TimeSeries(2000, y), d).values
        assert combined == pytest.approx(separate, abs=1e-12)


def test_difference_too_short():
    with pytest.raises(InsufficientDataError):
        difference(TimeSeries(2000, [1.0, 2.0]), 2)


def test_pivots_and_integrate_example():
    x = TimeSeries(2000, [1, 3, 6, 10])
    assert difference_pivots(x, 2, at="start") == [3.0, 2.0]
    rebuilt = integrate(difference(x, 2), difference_pivots(x, 2, at="start"), 2)
    assert rebuilt.values.tolist() == [6.0, 10.0]
    assert rebuilt.start_year == 2002


def test_end_pivots_continue_the_series():
    x = TimeSeries(2000, [1, 3, 6, 10])
    # next second difference 1 continues the quadratic: 15
    future = integrate(TimeSeries(2004, [1.0]), difference_pivots(x, 2, at="end"), 2)
    assert future.values.tolist() == [15.0]


def test_integrate_round_trip_is_exact(rng):
    for _ in range(1000):
        n = int(rng.integers(15, 81))
        d = int(rng.integers(0, 3))
        x = TimeSeries(1950, rng.integers(-500, 500, size=n).astype(float))
        rebuilt = integrate(difference(x, d), difference_pivots(x, d, at="start"), d)
        assert np.array_equal(x.head(d).concat(rebuilt).values if d else rebuilt.values, x.values)


def test_integrate_needs_matching_pivots():
    with pytest.raises(ArgumentError):
        integrate(TimeSeries(2000, [1.0, 2.0]), [1.0], 2)


def test_sample_acf_alternating_series():
    acf = sample_acf(TimeSeries(2000, [1, -1, 1, -1, 1, -1]), 1)
    assert acf[0] == pytest.approx(-5 / 6)


def test_sample_acf_worked_example():
    assert sample_acf(TimeSeries(2000, [1, 2, 3, 4, 5]), 1) == pytest.approx([0.4], abs=1e-12)


def test_sample_acf_constant_series():
    with pytest.raises(DegenerateSeriesError):
        sample_acf(TimeSeries(2000, [2.0] * 10), 2)


def test_sample_acf_bounded(ar1_series):
    acf = sample_acf(ar1_series, 10)
    assert np.all(np.abs(acf) <= 1.0)
    assert acf[0] == pytest.approx(0.6, abs=0.12)


def test_align_panel_overlap():
    a = TimeSeries(1960, np.arange(62.0), label="a")
    b = TimeSeries(1970, np.arange(52.0), label="b")
    c = TimeSeries(1965, np.arange(50.0), label="c")
    aligned = align_panel([a, b, c])
    assert [s.label for s in aligned] == ["a", "b", "c"]
    assert {(s.start_year, s.end_year) for s in aligned} == {(1970, 2014)}
    assert aligned[0].values[0] == 10.0


def test_align_panel_single_series_and_idempotence():
    a = TimeSeries(1960, np.arange(62.0), label="a")
    (alone,) = align_panel([a])
    assert alone.equals(a)
    once = align_panel([a, TimeSeries(1970, np.arange(52.0), label="b")])
    twice = align_panel(list(once))
    assert all(x.equals(y) for x, y in zip(once, twice))
    assert len({len(s) for s in twice}) == 1


def test_align_panel_disjoint():
    with pytest.raises(NoOverlapError):
        align_panel([TimeSeries(1960, [1.0, 2.0]), TimeSeries(1990, [1.0, 2.0])])


def test_time_series_rejects_missing_values():
    with pytest.raises(ArgumentError):
        TimeSeries(2000, [1.0, np.nan, 3.0])


def test_time_series_is_immutable():
    x = TimeSeries(2000, [1.0, 2.0])
    with pytest.raises(ValueError):
        x.values[0] = 5.0


def test_slice_head_tail():
    x = TimeSeries(2000, np.arange(10.0))
    assert x.slice_years(2003, 2005).values.tolist() == [3.0, 4.0, 5.0]
    assert x.head(2).end_year == 2001
    assert x.tail(3).start_year == 2007
    with pytest.raises(ArgumentError):
        x.slice_years(1999, 2002)


def test_forecast_frame_columns():
    f = Forecast(2022, [1.0, 2.0], [0.5, 1.0], [1.5, 3.0], 0.95)
    frame = f.to_frame()
    assert list(frame.columns) == ["year", "point", "lower", "upper"]
    assert frame["year"].tolist() == [2022, 2023]
    assert f.half_width().tolist() == [0.5, 1.0]
