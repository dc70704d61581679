import numpy as np
import pytest

from fuse3d import (
    Box3D,
    DimensionMismatch,
    PointCloud,
    PooledRoI,
    Proposal,
    enlarge_box,
    points_in_box,
    roi_pooled_fusion,
    select_proposals,
)
from oracles import random_box


def proposal(cx=0.0, score=0.5, l=1.0):
    return Proposal(Box3D(np.array([cx, 0.0, 0.0]), l, 1.0, 1.0, 0.0), score)


def feature_set(rng, n, c_img=2, c_pt=3, c_fused=4):
    return (
        rng.standard_normal((n, c_img)),
        rng.standard_normal((n, c_pt)),
        rng.standard_normal((n, c_fused)),
    )


class TestSelectProposals:
    def test_short_input_passes_through(self):
        props = [proposal(cx=10.0 * i, score=0.1 * (i + 1)) for i in range(5)]
        out = select_proposals(props, keep=64)
        assert len(out) == 5
        assert [p.score for p in out] == sorted((p.score for p in props),
                                                reverse=True)

    def test_heavy_overlap_collapses_to_best(self):
        props = [proposal(score=0.7), proposal(score=0.9), proposal(score=0.8)]
        out = select_proposals(props, nms_threshold=0.8)
        assert len(out) == 1
        assert out[0].score == 0.9

    def test_keep_cap(self):
        props = [proposal(cx=5.0 * i, score=1.0 - 0.01 * i) for i in range(10)]
        out = select_proposals(props, keep=3)
        assert [p.score for p in out] == [1.0, 0.99, 0.98]

    def test_pre_nms_cap_drops_low_scores_first(self):
        # only the two best enter NMS; the disjoint low scorer never does
        props = [proposal(cx=0.0, score=0.9), proposal(cx=0.1, score=0.8),
                 proposal(cx=50.0, score=0.1)]
        out = select_proposals(props, pre_nms_top=2, nms_threshold=0.01)
        assert [p.score for p in out] == [0.9]

    def test_score_tie_prefers_lower_index(self):
        props = [proposal(cx=0.0, score=0.5), proposal(cx=50.0, score=0.5)]
        out = select_proposals(props)
        assert out[0].box.center[0] == 0.0

    def test_default_constants(self):
        import inspect

        sig = inspect.signature(select_proposals)
        assert sig.parameters["pre_nms_top"].default == 8000
        assert sig.parameters["nms_threshold"].default == 0.8
        assert sig.parameters["keep"].default == 64


class TestRoiPooledFusion:
    def test_two_point_box_pads_with_zeros(self):
        coords = np.array([[0.0, 0, 0], [0.1, 0, 0], [50.0, 0, 0]])
        cloud = PointCloud(coords)
        rng = np.random.default_rng(80)
        f_img, f_pt, f_fused = feature_set(rng, 3)
        pooled = roi_pooled_fusion(proposal(), cloud, f_img, f_pt, f_fused,
                                   enlarge=0.2, n_points=8)
        assert pooled.valid_count == 2
        assert pooled.features.shape == (8, 3 + 2 + 3 + 4)
        np.testing.assert_array_equal(pooled.features[2:], 0.0)
        np.testing.assert_array_equal(pooled.indices[:2], [0, 1])
        np.testing.assert_array_equal(pooled.indices[2:], -1)

    def test_rows_carry_coordinates_and_features(self):
        rng = np.random.default_rng(81)
        cloud = PointCloud(rng.uniform(-0.4, 0.4, size=(20, 3)))
        f_img, f_pt, f_fused = feature_set(rng, 20)
        pooled = roi_pooled_fusion(proposal(), cloud, f_img, f_pt, f_fused,
                                   enlarge=0.0, n_points=64)
        for row in range(pooled.valid_count):
            src = pooled.indices[row]
            np.testing.assert_array_equal(pooled.features[row, :3],
                                          cloud.coords[src])
            np.testing.assert_array_equal(pooled.features[row, 3:5], f_img[src])
            np.testing.assert_array_equal(pooled.features[row, 5:8], f_pt[src])
            np.testing.assert_array_equal(pooled.features[row, 8:], f_fused[src])

    def test_gathered_set_matches_enlarged_containment(self):
        rng = np.random.default_rng(82)
        cloud = PointCloud(rng.uniform(-3, 3, size=(300, 3)))
        f_img, f_pt, f_fused = feature_set(rng, 300)
        prop = Proposal(random_box(rng), 0.5)
        pooled = roi_pooled_fusion(prop, cloud, f_img, f_pt, f_fused,
                                   enlarge=0.2, n_points=512)
        expected = points_in_box(cloud, enlarge_box(prop.box, 0.2))
        assert pooled.indices[:pooled.valid_count].tolist() == expected.tolist()

    def test_overflow_subsampling_is_seeded(self):
        rng = np.random.default_rng(83)
        cloud = PointCloud(rng.uniform(-0.5, 0.5, size=(100, 3)))
        f_img, f_pt, f_fused = feature_set(rng, 100)
        kwargs = dict(enlarge=0.0, n_points=16)
        a = roi_pooled_fusion(proposal(l=2.0), cloud, f_img, f_pt, f_fused,
                              seed=1, **kwargs)
        b = roi_pooled_fusion(proposal(l=2.0), cloud, f_img, f_pt, f_fused,
                              seed=1, **kwargs)
        c = roi_pooled_fusion(proposal(l=2.0), cloud, f_img, f_pt, f_fused,
                              seed=2, **kwargs)
        assert a.valid_count == b.valid_count == c.valid_count == 16
        np.testing.assert_array_equal(a.indices, b.indices)
        assert a.indices.tolist() != c.indices.tolist()
        # subsample draws from the containment set
        inside = set(points_in_box(cloud, proposal(l=2.0).box).tolist())
        assert set(a.indices.tolist()) <= inside

    def test_empty_roi(self):
        cloud = PointCloud(np.full((4, 3), 100.0))
        rng = np.random.default_rng(84)
        f_img, f_pt, f_fused = feature_set(rng, 4)
        pooled = roi_pooled_fusion(proposal(), cloud, f_img, f_pt, f_fused,
                                   n_points=8)
        assert pooled.valid_count == 0
        np.testing.assert_array_equal(pooled.features, 0.0)
        np.testing.assert_array_equal(pooled.indices, -1)

    def test_marginal_point_included_only_when_enlarged(self):
        # point 0.05 outside the face: inside after enlarging by 0.2
        cloud = PointCloud(np.array([[0.55, 0.0, 0.0]]))
        rng = np.random.default_rng(85)
        f_img, f_pt, f_fused = feature_set(rng, 1)
        tight = roi_pooled_fusion(proposal(), cloud, f_img, f_pt, f_fused,
                                  enlarge=0.0, n_points=4)
        grown = roi_pooled_fusion(proposal(), cloud, f_img, f_pt, f_fused,
                                  enlarge=0.2, n_points=4)
        assert tight.valid_count == 0
        assert grown.valid_count == 1

    def test_feature_row_count_checked(self):
        cloud = PointCloud(np.zeros((3, 3)))
        rng = np.random.default_rng(86)
        f_img, f_pt, f_fused = feature_set(rng, 4)
        with pytest.raises(DimensionMismatch):
            roi_pooled_fusion(proposal(), cloud, f_img, f_pt, f_fused)

    def test_default_constants(self):
        import inspect

        sig = inspect.signature(roi_pooled_fusion)
        assert sig.parameters["enlarge"].default == 0.2
        assert sig.parameters["n_points"].default == 512

    def test_shape_constant_across_occupancy(self):
        rng = np.random.default_rng(87)
        cloud = PointCloud(rng.uniform(-2, 2, size=(600, 3)))
        f_img, f_pt, f_fused = feature_set(rng, 600)
        for l in (0.2, 1.0, 4.0):
            pooled = roi_pooled_fusion(proposal(l=l), cloud, f_img, f_pt,
                                       f_fused, n_points=32)
            assert isinstance(pooled, PooledRoI)
            assert pooled.features.shape == (32, 12)
            assert pooled.indices.shape == (32,)
