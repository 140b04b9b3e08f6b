import numpy as np
import pytest

from texclass import Direction, Glcm, QuantizedImage, compute_glcm, glcm_set, marginals
from texclass.errors import DataError

from oracles import brute_glcm_counts


def _random_image(rng, levels, shape):
    return QuantizedImage(levels=levels, data=rng.integers(0, levels, size=shape))


class TestComputeGlcm:
    def test_constant_image_single_entry(self):
        q = QuantizedImage(levels=64, data=np.full((20, 20), 5))
        for direction in Direction:
            g = compute_glcm(q, direction)
            assert g.p[5, 5] == 1.0
            assert g.p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_hand_counted_row(self):
        q = QuantizedImage(levels=4, data=np.array([[0, 1, 2]]))
        g = compute_glcm(q, Direction.D0, offset=1)
        expected = np.zeros((4, 4))
        expected[0, 1] = expected[1, 0] = expected[1, 2] = expected[2, 1] = 0.25
        np.testing.assert_array_equal(g.p, expected)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            levels = int(rng.choice([4, 8, 16]))
            shape = (int(rng.integers(4, 17)), int(rng.integers(4, 17)))
            q = _random_image(rng, levels, shape)
            for direction in Direction:
                dr, dc = direction.displacement
                counts = brute_glcm_counts(q.data, levels, dr, dc)
                g = compute_glcm(q, direction)
                np.testing.assert_allclose(g.p, counts / counts.sum(), atol=0)

    def test_symmetric_by_construction(self):
        rng = np.random.default_rng(7)
        q = _random_image(rng, 8, (12, 12))
        for direction in Direction:
            g = compute_glcm(q, direction)
            np.testing.assert_array_equal(g.p, g.p.T)

    def test_horizontal_mirror_invariance(self):
        rng = np.random.default_rng(3)
        q = _random_image(rng, 8, (10, 14))
        mirrored = QuantizedImage(levels=8, data=q.data[:, ::-1].copy())
        np.testing.assert_allclose(
            compute_glcm(q, Direction.D0).p,
            compute_glcm(mirrored, Direction.D0).p,
        )

    def test_offset_validation(self):
        q = QuantizedImage(levels=4, data=np.zeros((4, 4), dtype=int))
        with pytest.raises(ValueError):
            compute_glcm(q, Direction.D0, offset=0)

    def test_too_small_for_pairs(self):
        q = QuantizedImage(levels=4, data=np.zeros((1, 1), dtype=int))
        with pytest.raises(DataError):
            compute_glcm(q, Direction.D0, offset=1)


class TestGlcmSet:
    def test_constant_image_zero_range(self):
        q = QuantizedImage(levels=16, data=np.full((16, 16), 3))
        gset = glcm_set(q)
        assert all(gset.by_direction[d].p[3, 3] == 1.0 for d in Direction)
        np.testing.assert_array_equal(gset.rng, 0.0)

    def test_rotationally_symmetric_image(self):
        # concentric square rings are invariant under 90-degree rotation
        side = 16
        yy, xx = np.mgrid[0:side, 0:side]
        rings = np.maximum(np.abs(yy - 7.5), np.abs(xx - 7.5)).astype(np.int64)
        q = QuantizedImage(levels=int(rings.max()) + 1, data=rings)
        assert np.array_equal(np.rot90(rings), rings)
        gset = glcm_set(q)
        np.testing.assert_allclose(
            gset.by_direction[Direction.D0].p,
            gset.by_direction[Direction.D90].p,
            atol=1e-15,
        )

    def test_avg_is_valid_distribution(self):
        rng = np.random.default_rng(9)
        q = _random_image(rng, 8, (10, 10))
        gset = glcm_set(q)
        assert gset.avg.p.sum() == pytest.approx(1.0, abs=1e-9)
        stack = np.stack([gset.by_direction[d].p for d in Direction])
        np.testing.assert_allclose(gset.avg.p, stack.mean(axis=0))
        np.testing.assert_allclose(gset.rng, stack.max(axis=0) - stack.min(axis=0))
        assert gset.rng.min() >= 0.0


class TestMarginals:
    def test_single_entry(self):
        p = np.zeros((8, 8))
        p[5, 5] = 1.0
        m = marginals(Glcm(levels=8, p=p))
        expected = np.zeros(8)
        expected[5] = 1.0
        np.testing.assert_array_equal(m.p_x, expected)
        assert m.hxy == 0.0
        assert m.p_sum[10] == 1.0
        assert m.p_diff[0] == 1.0

    def test_uniform_glcm_closed_form(self):
        levels = 4
        m = marginals(Glcm(levels=levels, p=np.full((levels, levels), 1 / 16)))
        assert m.hxy == pytest.approx(np.log(16), rel=1e-12)
        # p_sum is triangular: 1/16 * (1, 2, 3, 4, 3, 2, 1)
        np.testing.assert_allclose(
            m.p_sum, np.array([1, 2, 3, 4, 3, 2, 1]) / 16.0
        )

    def test_repartition_of_mass(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            raw = rng.random((8, 8))
            sym = raw + raw.T
            m = marginals(Glcm(levels=8, p=sym / sym.sum()))
            assert m.p_sum.sum() == pytest.approx(1.0, abs=1e-9)
            assert m.p_diff.sum() == pytest.approx(1.0, abs=1e-9)
            assert m.p_x.sum() == pytest.approx(1.0, abs=1e-9)
            np.testing.assert_allclose(m.p_x, m.p_y, atol=1e-12)


class TestGlcmInvariants:
    def test_mass_validation(self):
        with pytest.raises(DataError):
            Glcm(levels=2, p=np.array([[0.5, 0.2], [0.2, 0.2]]))

    def test_negative_entries_rejected(self):
        with pytest.raises(DataError):
            Glcm(levels=2, p=np.array([[1.2, -0.1], [-0.1, 0.0]]))
