import math

import numpy as np
import pytest

from crossseg.errors import DimensionMismatch, EmptyMask
from crossseg.geometry import Point2, Segment, build_cross, shrink_cross
from crossseg.pseudo_mask import (MaskGrid, MaskOp, SigmaSpec, initial_weight,
                                  rasterize_pseudo_mask, relative_errors)

from test_geometry import random_crossing_pair, seg


def grid_cross(ox, oy, arms=(2.0, 2.0, 2.0, 2.0), angle_deg=0.0, tilt_deg=90.0):
    """Cross at (ox, oy): AB along angle+90 ... convenience for tests."""
    a1 = math.radians(angle_deg + 90.0)
    a2 = math.radians(angle_deg + 90.0 + tilt_deg)
    oa, ob, oc, od = arms
    s_ab = seg(ox + oa * math.cos(a1), oy + oa * math.sin(a1),
               ox - ob * math.cos(a1), oy - ob * math.sin(a1))
    s_cd = seg(ox - oc * math.cos(a2), oy - oc * math.sin(a2),
               ox + od * math.cos(a2), oy + od * math.sin(a2))
    return build_cross(s_ab, s_cd)


class TestInitialWeight:
    def test_origin_is_one(self):
        for op in MaskOp:
            assert initial_weight(0.0, 0.0, 3.0, 5.0, op) == pytest.approx(1.0)

    def test_analytic_at_sigma(self):
        s = 4.0
        assert initial_weight(s, 0.0, s, s, MaskOp.MULTIPLY) == pytest.approx(
            math.exp(-1), abs=1e-9)
        assert initial_weight(s, 0.0, s, s, MaskOp.ADD) == pytest.approx(
            (math.exp(-1) + 1.0) / 2.0, abs=1e-9)
        assert initial_weight(s, 0.0, s, s, MaskOp.MAX) == pytest.approx(1.0)

    def test_infinite_sigma(self):
        for op in MaskOp:
            assert initial_weight(7.3, -2.1, math.inf, math.inf, op) == 1.0

    def test_operator_ordering(self):
        rng = np.random.default_rng(0)
        for _ in range(2000):
            x, y = rng.uniform(-10, 10, size=2)
            sx, sy = rng.uniform(0.5, 8.0, size=2)
            mul = initial_weight(x, y, sx, sy, MaskOp.MULTIPLY)
            add = initial_weight(x, y, sx, sy, MaskOp.ADD)
            mx = initial_weight(x, y, sx, sy, MaskOp.MAX)
            assert 0.0 <= mul <= add <= mx <= 1.0

    def test_monotone_in_sigma(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            x, y = rng.uniform(-10, 10, size=2)
            s_small, s_big = np.sort(rng.uniform(0.5, 12.0, size=2))
            for op in MaskOp:
                assert (initial_weight(x, y, s_small, s_small, op)
                        <= initial_weight(x, y, s_big, s_big, op) + 1e-15)

    def test_parse_ops(self):
        assert MaskOp.parse("mul") is MaskOp.MULTIPLY
        assert MaskOp.parse("ADD") is MaskOp.ADD
        assert MaskOp.parse("max") is MaskOp.MAX
        with pytest.raises(ValueError):
            MaskOp.parse("min")


class TestRasterize:
    def test_centered_square(self):
        cross = grid_cross(5.5, 5.5)
        mask = rasterize_pseudo_mask(cross, SigmaSpec.infinite(),
                                     MaskOp.MULTIPLY, 11, 11)
        assert mask.positive_count == 25
        assert set(np.unique(mask.weights)) == {0.0, 1.0}
        block = mask.weights[3:8, 3:8]
        assert np.all(block == 1.0)

    def test_infinite_sigma_binary_and_identical(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            s1, s2, _ = random_crossing_pair(rng)
            s1 = Segment(Point2(s1.a.x + 60, s1.a.y + 60),
                         Point2(s1.b.x + 60, s1.b.y + 60))
            s2 = Segment(Point2(s2.a.x + 60, s2.a.y + 60),
                         Point2(s2.b.x + 60, s2.b.y + 60))
            cross = build_cross(s1, s2)
            masks = [rasterize_pseudo_mask(cross, SigmaSpec.infinite(), op, 120, 120)
                     for op in MaskOp]
            for m in masks:
                vals = np.unique(m.weights)
                assert set(vals).issubset({0.0, 1.0})
            assert np.array_equal(masks[0].weights, masks[1].weights)
            assert np.array_equal(masks[0].weights, masks[2].weights)

    def test_matches_initial_weight_pointwise(self):
        cross = grid_cross(20.3, 18.7, arms=(6.0, 4.0, 5.0, 7.0),
                           angle_deg=25.0, tilt_deg=80.0)
        sigma = SigmaSpec(1.0)
        for op in MaskOp:
            mask = rasterize_pseudo_mask(cross, sigma, op, 40, 40)
            # recompute a sample of inside pixels through the scalar path
            ys, xs = np.nonzero(mask.weights)
            rng = np.random.default_rng(3)
            picks = rng.choice(len(ys), size=min(50, len(ys)), replace=False)
            for k in picks:
                i, j = ys[k], xs[k]
                x, y = self._arm_frame(cross, j + 0.5, i + 0.5)
                sx = sigma.ratio * (cross.arm_od if x >= 0 else cross.arm_oc)
                sy = sigma.ratio * (cross.arm_oa if y >= 0 else cross.arm_ob)
                assert mask.weights[i, j] == pytest.approx(
                    initial_weight(x, y, sx, sy, op), abs=1e-12)

    @staticmethod
    def _arm_frame(cross, px, py):
        o = cross.origin
        vx, vy = cross.direction
        # default direction: x axis towards D
        dx = cross.seg_cd.b.x - o.x
        dy = cross.seg_cd.b.y - o.y
        n = math.hypot(dx, dy)
        ux, uy = dx / n, dy / n
        det = ux * vy - uy * vx
        rx, ry = px - o.x, py - o.y
        return (vy * rx - vx * ry) / det, (-uy * rx + ux * ry) / det

    def test_area_matches_parallelogram_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            arms = rng.uniform(12, 40, size=4)
            cross = grid_cross(64 + rng.uniform(-5, 5), 64 + rng.uniform(-5, 5),
                               arms=tuple(arms),
                               angle_deg=rng.uniform(0, 180),
                               tilt_deg=rng.uniform(60, 120))
            mask = rasterize_pseudo_mask(cross, SigmaSpec.infinite(),
                                         MaskOp.MULTIPLY, 192, 192)
            expect = ((cross.arm_oa + cross.arm_ob)
                      * (cross.arm_oc + cross.arm_od) * cross.crossing_sin)
            assert mask.positive_count == pytest.approx(expect, rel=0.05)

    def test_direction_override_equals_physical_rotation(self):
        # overriding the direction must reproduce a physically rotated cross
        arms = (8.3, 4.2, 5.1, 6.4)
        theta = 37.0
        upright = grid_cross(30.2, 29.8, arms=arms, angle_deg=0.0, tilt_deg=84.0)
        overridden = build_cross(upright.seg_ab, upright.seg_cd,
                                 direction_override=theta + 90.0)
        rotated = grid_cross(30.2, 29.8, arms=arms, angle_deg=theta,
                             tilt_deg=84.0)
        for sigma in (SigmaSpec.infinite(), SigmaSpec(1.2)):
            m1 = rasterize_pseudo_mask(overridden, sigma, MaskOp.MULTIPLY, 61, 61)
            m2 = rasterize_pseudo_mask(rotated, sigma, MaskOp.MULTIPLY, 61, 61)
            np.testing.assert_allclose(m1.weights, m2.weights, atol=1e-9)

    def test_shrink_area_law(self):
        rng = np.random.default_rng(5)
        base_areas, results = [], {0.1: [], 0.3: [], 0.5: []}
        for _ in range(50):
            arms = rng.uniform(15, 40, size=4)
            cross = grid_cross(80 + rng.uniform(-4, 4), 80 + rng.uniform(-4, 4),
                               arms=tuple(arms),
                               angle_deg=rng.uniform(0, 180),
                               tilt_deg=rng.uniform(60, 120))
            base = rasterize_pseudo_mask(cross, SigmaSpec.infinite(),
                                         MaskOp.MULTIPLY, 160, 160).positive_count
            for rate in results:
                shrunk = rasterize_pseudo_mask(shrink_cross(cross, rate),
                                               SigmaSpec.infinite(),
                                               MaskOp.MULTIPLY, 160, 160).positive_count
                results[rate].append(shrunk / base)
        for rate, expect in ((0.1, 0.81), (0.3, 0.49), (0.5, 0.25)):
            assert np.mean(results[rate]) == pytest.approx(expect, abs=0.03)

    def test_translation_equivariance(self):
        cross = grid_cross(20.3, 22.1, arms=(5, 6, 4, 7), angle_deg=33.0,
                           tilt_deg=95.0)
        mask = rasterize_pseudo_mask(cross, SigmaSpec(1.5), MaskOp.ADD, 64, 64)

        def shift_seg(s, dx, dy):
            return Segment(Point2(s.a.x + dx, s.a.y + dy),
                           Point2(s.b.x + dx, s.b.y + dy))

        moved = build_cross(shift_seg(cross.seg_ab, 7, 9),
                            shift_seg(cross.seg_cd, 7, 9))
        mask2 = rasterize_pseudo_mask(moved, SigmaSpec(1.5), MaskOp.ADD, 64, 64)
        np.testing.assert_allclose(mask2.weights[9:, 7:],
                                   mask.weights[:-9, :-7], atol=1e-12)

    def test_monotone_in_sigma_ratio(self):
        cross = grid_cross(16.5, 16.5, arms=(6, 5, 4, 7), tilt_deg=85.0)
        prev = rasterize_pseudo_mask(cross, SigmaSpec(0.5), MaskOp.MULTIPLY,
                                     33, 33).weights
        for ratio in (0.75, 1.0, 1.5, 2.0, math.inf):
            cur = rasterize_pseudo_mask(cross, SigmaSpec(ratio),
                                        MaskOp.MULTIPLY, 33, 33).weights
            assert np.all(cur >= prev - 1e-12)
            prev = cur


class TestRelativeErrors:
    def test_identical(self):
        m = MaskGrid.from_array(np.pad(np.ones((2, 2)), 1))
        assert relative_errors(m, m) == (0.0, 0.0)

    def test_hand_counted(self):
        gt = np.zeros((4, 4))
        gt[:, :2] = 1.0
        pseudo = np.zeros((4, 4))
        pseudo[:2, :2] = 1.0
        e_p, e_n = relative_errors(MaskGrid.from_array(pseudo),
                                   MaskGrid.from_array(gt))
        assert e_p == 0.0
        assert e_n == pytest.approx(4 / 12)

    def test_disjoint_extreme(self):
        pseudo = np.ones((3, 3))
        pseudo[0, 0] = 0.0
        gt = np.zeros((3, 3))
        e_p, e_n = relative_errors(MaskGrid.from_array(pseudo),
                                   MaskGrid.from_array(gt))
        assert e_p == 1.0
        assert e_n == 0.0

    def test_empty_denominators(self):
        zeros = MaskGrid.from_array(np.zeros((3, 3)))
        ones = MaskGrid.from_array(np.ones((3, 3)))
        with pytest.raises(EmptyMask):
            relative_errors(zeros, ones)
        with pytest.raises(EmptyMask):
            relative_errors(ones, zeros)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            relative_errors(MaskGrid.from_array(np.ones((2, 2))),
                            MaskGrid.from_array(np.ones((3, 3))))

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            pseudo = (rng.random((9, 7)) > 0.5).astype(float)
            gt = (rng.random((9, 7)) > 0.5).astype(float)
            if pseudo.sum() in (0, pseudo.size):
                continue
            e_p, e_n = relative_errors(MaskGrid.from_array(pseudo),
                                       MaskGrid.from_array(gt))
            fp = fn = npos = nneg = 0
            for i in range(9):
                for j in range(7):
                    if pseudo[i, j] > 0:
                        npos += 1
                        if gt[i, j] == 0:
                            fp += 1
                    else:
                        nneg += 1
                        if gt[i, j] > 0:
                            fn += 1
            assert e_p == pytest.approx(fp / npos, abs=1e-12)
            assert e_n == pytest.approx(fn / nneg, abs=1e-12)
