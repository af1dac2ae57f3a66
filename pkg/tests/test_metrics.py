import numpy as np
import pytest

from curvedepth.errors import EmptySetError, GridMismatchError
from curvedepth.fdata import Curve, CurveSet, Grid
from curvedepth.metrics import (
    HYPER,
    L2,
    L2_RIEMANN,
    SUP,
    MetricDescriptor,
    ShrinkTransform,
    distance,
    hausdorff,
    intensity,
    pairwise,
    shrink,
)


def curve(grid_pts, values):
    return Curve(Grid(grid_pts), values)


class TestDistance:
    def test_sup_identity(self):
        a = curve([0, 1, 2], [1.0, 2.0, 3.0])
        assert distance(SUP, a, a) == 0.0

    def test_l2_unweighted_euclidean(self):
        a = curve([0, 1, 2, 3], [1.0, 1.0, 1.0, 1.0])
        b = curve([0, 1, 2, 3], [0.0, 0.0, 0.0, 0.0])
        assert distance(L2, a, b) == pytest.approx(2.0)

    def test_l2_riemann_weights_cells(self):
        g = [0.0, 1.0, 2.0]  # uniform, unit cells
        a = curve(g, [1.0, 1.0, 1.0])
        b = curve(g, [0.0, 0.0, 0.0])
        assert distance(L2_RIEMANN, a, b) == pytest.approx(np.sqrt(3.0))

    def test_grid_mismatch_rejected(self):
        a = curve([0, 1], [1.0, 2.0])
        b = curve([0, 2], [1.0, 2.0])
        with pytest.raises(GridMismatchError):
            distance(L2, a, b)

    def test_hyperbolic_constant_means(self):
        a = curve([0, 1, 2], [2.0, 2.0, 2.0])
        b = curve([5, 6, 7, 8], [5.0, 5.0, 5.0, 5.0])  # different grid is fine
        assert distance(HYPER, a, b) == pytest.approx(3.0)

    def test_hyperbolic_zero_function(self):
        a = curve([0, 1], [4.0, 2.0])
        zero = curve([0, 1, 2], [0.0, 0.0, 0.0])
        assert distance(HYPER, a, zero) == pytest.approx(intensity(a).i_value)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            MetricDescriptor("l3")

    def test_cli_aliases(self):
        assert MetricDescriptor("l2") == L2
        assert MetricDescriptor("sup") == SUP


class TestIntensity:
    def test_constant(self):
        assert intensity(curve([0, 1, 2], [3.0, 3.0, 3.0])).i_value == pytest.approx(3.0)

    def test_all_zero(self):
        s = intensity(curve([0, 1], [0.0, 0.0]))
        assert s.i_value == 0.0
        assert s.support_measure == 0.0

    def test_three_unit_cells(self):
        s = intensity(curve([0.0, 1.0, 2.0], [2.0, 0.0, 4.0]))
        assert s.integral == pytest.approx(6.0)
        assert s.support_measure == pytest.approx(2.0)
        assert s.i_value == pytest.approx(3.0)


class TestHausdorff:
    def test_identical_sets(self):
        g = Grid([0, 1])
        a = [Curve(g, [0.0, 0.0]), Curve(g, [1.0, 1.0])]
        assert hausdorff(SUP, a, a) == 0.0

    def test_one_point_vs_pair(self):
        g = Grid([0, 1])
        a = [Curve(g, [0.0, 0.0])]
        b = [Curve(g, [0.0, 0.0]), Curve(g, [1.0, 1.0])]
        assert hausdorff(SUP, a, b) == pytest.approx(1.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        g = Grid(np.arange(4.0))
        for _ in range(30):
            a = [Curve(g, rng.standard_normal(4)) for _ in range(3)]
            b = [Curve(g, rng.standard_normal(4)) for _ in range(3)]
            d = np.array([[distance(L2, x, y) for y in b] for x in a])
            brute = max(d.min(axis=1).max(), d.min(axis=0).max())
            assert hausdorff(L2, a, b) == pytest.approx(brute)

    def test_empty_set_rejected(self):
        g = Grid([0, 1])
        a = [Curve(g, [0.0, 0.0])]
        with pytest.raises(EmptySetError):
            hausdorff(L2, a, [])

    def test_curveset_arguments(self):
        cs = CurveSet(Grid([0, 1]), [[0.0, 0.0], [2.0, 2.0]])
        assert hausdorff(SUP, cs, cs.subset([0])) == pytest.approx(2.0)


class TestShrink:
    def test_zero_curve_fixed_point(self):
        z = curve([0, 1], [0.0, 0.0])
        out = shrink(ShrinkTransform(region=[0], alpha=0.3), z)
        assert out.values.tolist() == [0.0, 0.0]

    def test_direct_definition(self):
        out = shrink(ShrinkTransform(region=[0], alpha=0.5), curve([0, 1], [2.0, 2.0]))
        assert out.values.tolist() == [1.0, 2.0]

    def test_region_must_be_proper_subset(self):
        with pytest.raises(ValueError, match="proper subset"):
            shrink(ShrinkTransform(region=[0, 1], alpha=0.5), curve([0, 1], [1.0, 1.0]))

    def test_contraction_for_l2_on_region_differing_pairs(self):
        # pairs differing at every region point: shrinking strictly reduces
        # the l2 distances
        rng = np.random.default_rng(11)
        g = Grid(np.arange(6.0))
        t = ShrinkTransform(region=[0, 1, 2], alpha=0.6)
        for _ in range(200):
            a = rng.standard_normal(6)
            b = rng.standard_normal(6)
            if np.any(a[:3] == b[:3]):
                continue
            ca, cb = Curve(g, a), Curve(g, b)
            for metric in (L2, L2_RIEMANN):
                assert distance(metric, shrink(t, ca), shrink(t, cb)) < distance(metric, ca, cb)

    def test_contraction_for_sup_when_gap_peaks_inside_region(self):
        # the sup distance contracts strictly only when the largest gap sits
        # inside the shrink region
        rng = np.random.default_rng(12)
        g = Grid(np.arange(6.0))
        t = ShrinkTransform(region=[0, 1, 2], alpha=0.6)
        for _ in range(200):
            a = rng.standard_normal(6)
            b = a + np.concatenate([rng.uniform(1, 2, 3), rng.uniform(0.01, 0.5, 3)])
            ca, cb = Curve(g, a), Curve(g, b)
            assert distance(SUP, shrink(t, ca), shrink(t, cb)) < distance(SUP, ca, cb)


class TestMetricAxioms:
    def test_grid_metric_axioms(self):
        rng = np.random.default_rng(3)
        g = Grid(np.arange(5.0))
        for _ in range(200):
            a, b, c = (Curve(g, rng.standard_normal(5)) for _ in range(3))
            for m in (L2, L2_RIEMANN, SUP):
                dab = distance(m, a, b)
                assert dab == distance(m, b, a)
                assert distance(m, a, a) == 0.0
                assert dab > 0.0  # distinct samples almost surely
                assert dab <= distance(m, a, c) + distance(m, c, b) + 1e-12

    def test_hyperbolic_pseudometric_axioms_heterogeneous_grids(self):
        rng = np.random.default_rng(4)
        curves = []
        for _ in range(60):
            gl = rng.integers(1, 8)
            pts = np.sort(rng.uniform(0, 10, gl))
            pts += np.arange(gl) * 1e-9
            vals = rng.standard_normal(gl) * rng.uniform(0.1, 10)
            vals[rng.random(gl) < 0.2] = 0.0
            curves.append(Curve(Grid(pts), vals))
        rng_idx = np.random.default_rng(5)
        for _ in range(1000):
            a, b, c = (curves[i] for i in rng_idx.integers(0, len(curves), 3))
            assert distance(HYPER, a, b) == distance(HYPER, b, a)
            assert distance(HYPER, a, a) == 0.0
            assert distance(HYPER, a, b) <= distance(HYPER, a, c) + distance(HYPER, c, b) + 1e-12


class TestPairwise:
    def test_matches_scalar_distance(self):
        rng = np.random.default_rng(9)
        g = Grid(np.sort(rng.uniform(0, 1, 5)))
        a = rng.standard_normal((4, 5))
        b = rng.standard_normal((3, 5))
        for m in (L2, L2_RIEMANN, SUP, HYPER):
            mat = pairwise(m, g, a, b)
            for i in range(4):
                for j in range(3):
                    assert mat[i, j] == pytest.approx(
                        distance(m, Curve(g, a[i]), Curve(g, b[j])), abs=1e-12
                    )
