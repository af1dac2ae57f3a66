import numpy as np
import pytest

from curvedepth.errors import ParseError
from curvedepth.fdata import (
    Curve,
    CurveSet,
    Grid,
    RngStream,
    SubsampleSpec,
    draw_subsample,
    read_curveset_csv,
    write_curveset_csv,
)


def make_set(n, g, rng):
    grid = Grid(np.sort(rng.uniform(-5, 5, size=g)) + np.arange(g) * 1e-6)
    return CurveSet(grid, rng.standard_normal((n, g)))


class TestGrid:
    def test_requires_increasing(self):
        with pytest.raises(ValueError, match="increasing"):
            Grid([0.1, 0.2, 0.1])

    def test_requires_finite(self):
        with pytest.raises(ValueError, match="finite"):
            Grid([0.0, np.inf])

    def test_single_point_ok(self):
        g = Grid([3.0])
        assert len(g) == 1
        assert g.cell_widths().tolist() == [1.0]

    def test_uniform_cell_widths(self):
        g = Grid(np.arange(1, 100) / 100.0)
        assert np.allclose(g.cell_widths(), 0.01)
        assert g.cell_widths().sum() == pytest.approx(0.99)

    def test_nonuniform_cell_widths_cover_span_plus_end_halves(self):
        g = Grid([0.0, 1.0, 3.0])
        # interior edges at .5 and 2; ends mirror their inner half-gap
        assert np.allclose(g.cell_widths(), [1.0, 1.5, 2.0])

    def test_equality(self):
        assert Grid([1, 2]) == Grid([1.0, 2.0])
        assert Grid([1, 2]) != Grid([1, 3])


class TestCurveSet:
    def test_row_width_checked(self):
        with pytest.raises(ValueError):
            CurveSet(Grid([0, 1]), np.zeros((2, 3)))

    def test_curves_immutable(self):
        cs = CurveSet(Grid([0, 1]), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            cs.curves[0, 0] = 1.0

    def test_curve_accessor(self):
        cs = CurveSet(Grid([0, 1]), [[1.0, 2.0], [3.0, 4.0]])
        c = cs.curve(1)
        assert isinstance(c, Curve)
        assert c.values.tolist() == [3.0, 4.0]


class TestDrawSubsample:
    def test_exhaustive_draw_is_permutation(self):
        cs = CurveSet(Grid([0.0]), np.arange(5.0)[:, None])
        idx = draw_subsample(cs, 5, RngStream(123, 0))
        assert sorted(idx.tolist()) == [0, 1, 2, 3, 4]

    def test_single_curve(self):
        cs = CurveSet(Grid([0.0]), [[1.0]])
        assert draw_subsample(cs, 1, RngStream(0, 0)).tolist() == [0]

    def test_deterministic(self):
        cs = CurveSet(Grid([0.0]), np.arange(100.0)[:, None])
        a = draw_subsample(cs, 10, RngStream(7, 0))
        b = draw_subsample(cs, 10, RngStream(7, 0))
        assert a.tolist() == b.tolist()

    def test_streams_differ(self):
        cs = CurveSet(Grid([0.0]), np.arange(100.0)[:, None])
        a = draw_subsample(cs, 10, RngStream(7, 0))
        b = draw_subsample(cs, 10, RngStream(7, 1))
        assert a.tolist() != b.tolist()

    def test_oversized_draw_rejected(self):
        cs = CurveSet(Grid([0.0]), np.arange(3.0)[:, None])
        with pytest.raises(ValueError, match="distinct"):
            draw_subsample(cs, 4, RngStream(0, 0))

    def test_distinct_indices(self):
        cs = CurveSet(Grid([0.0]), np.arange(40.0)[:, None])
        for seed in range(50):
            idx = draw_subsample(cs, 17, RngStream(seed, 0))
            assert len(set(idx.tolist())) == 17

    def test_uniform_within_3_sigma(self):
        n, count, draws = 25, 5, 4000
        cs = CurveSet(Grid([0.0]), np.arange(float(n))[:, None])
        hits = np.zeros(n)
        for seed in range(draws):
            hits[draw_subsample(cs, count, RngStream(seed, 0))] += 1
        p = count / n
        sigma = np.sqrt(draws * p * (1 - p))
        assert np.all(np.abs(hits - draws * p) <= 3 * sigma)


class TestSubsampleSpec:
    def test_validates_sizes(self):
        with pytest.raises(ValueError):
            SubsampleSpec(0, 1, 0)
        cs = CurveSet(Grid([0.0]), np.arange(3.0)[:, None])
        with pytest.raises(ValueError, match="exceed"):
            SubsampleSpec(4, 1, 0).validate_for(cs)


class TestCurveSetCsv:
    def test_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(0)
        cs = make_set(2, 3, rng)
        path = tmp_path / "set.csv"
        write_curveset_csv(cs, path)
        back = read_curveset_csv(path)
        assert back.grid == cs.grid
        assert np.array_equal(back.curves, cs.curves)

    def test_round_trip_many(self, tmp_path):
        rng = np.random.default_rng(42)
        path = tmp_path / "set.csv"
        for _ in range(1000):
            cs = make_set(rng.integers(1, 5), rng.integers(1, 6), rng)
            write_curveset_csv(cs, path)
            back = read_curveset_csv(path)
            assert back.grid == cs.grid
            assert np.array_equal(back.curves, cs.curves)

    def test_non_increasing_grid(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2,0.1\n1,2,3\n")
        with pytest.raises(ParseError, match="not increasing"):
            read_curveset_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError, match="empty"):
            read_curveset_csv(path)

    def test_ragged_row_named(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("0.1,0.2\n1,2\n1,2,3\n")
        with pytest.raises(ParseError, match="row 3"):
            read_curveset_csv(path)

    def test_non_numeric_cell_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2\n1,x\n")
        with pytest.raises(ParseError, match="row 2, column 2"):
            read_curveset_csv(path)
