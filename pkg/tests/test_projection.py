"""Per-block features: contraction property, diagnostics, fitting."""

import math

import numpy as np
import pytest

from lpcascade import (
    ADAPTIVE,
    ORTHOGONAL,
    BlockPartition,
    BlockProjector,
    ProjectionLevel,
    adaptive_feature,
    as_norm_order,
    diversion,
    fit_adaptive_level,
    lp_distance,
    lp_norm,
    orthogonal_feature,
    orthogonal_level,
    project_level,
    project_rows,
    q_mapping_norm,
)
from lpcascade.norms import distances_to_point

BISECT2 = np.array([1.0, 1.0]) / math.sqrt(2.0)


def mean_projector_matrix(m):
    """Explicit rank-1 matrix with entries 1/m."""
    return np.full((m, m), 1.0 / m)


def test_partition_validation():
    part = BlockPartition(dim_in=8, block_count=4, block_size=2)
    assert part.block_size == 2
    with pytest.raises(ValueError):
        BlockPartition(dim_in=8, block_count=3, block_size=2)
    with pytest.raises(ValueError):
        BlockPartition.for_dims(10, 4)
    assert BlockPartition.for_dims(64, 16).block_size == 4


def test_orthogonal_feature_examples():
    assert orthogonal_feature([1, 3], 2) == pytest.approx(2.0 * math.sqrt(2.0))
    assert orthogonal_feature([1, 3], 1) == pytest.approx(4.0)
    assert orthogonal_feature([1, 3], "inf") == pytest.approx(2.0)
    # a vector on the m-secting line keeps its full norm
    assert orthogonal_feature([5, 5, 5, 5], 2) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        orthogonal_feature([], 2)


def test_adaptive_feature_examples():
    proj2 = BlockProjector.adaptive(BISECT2, 2)
    assert proj2.lipschitz_scale == 1.0
    assert adaptive_feature([1, 3], proj2) == pytest.approx(4.0 / math.sqrt(2.0))
    assert adaptive_feature([1, 3], proj2) == pytest.approx(orthogonal_feature([1, 3], 2))

    axis = BlockProjector.adaptive(np.array([1.0, 0.0]), 2)
    assert adaptive_feature([1, 3], axis) == pytest.approx(1.0)

    proj_inf = BlockProjector.adaptive(BISECT2, "inf")
    assert proj_inf.lipschitz_scale == pytest.approx(math.sqrt(2.0))
    assert adaptive_feature([1, 3], proj_inf) == pytest.approx(2.0)


def test_adaptive_feature_chebyshev_is_lipschitz():
    proj = BlockProjector.adaptive(BISECT2, "inf")
    rng = np.random.Generator(np.random.Philox(key=20))
    x = rng.standard_normal((100_000, 2))
    y = rng.standard_normal((100_000, 2))
    feat_gap = np.abs((x - y) @ proj.direction) / proj.lipschitz_scale
    true_gap = np.abs(x - y).max(axis=1)
    assert np.all(feat_gap <= true_gap * (1.0 + 1e-12))


def test_projector_validation():
    with pytest.raises(ValueError):
        BlockProjector(mode="sideways")
    with pytest.raises(ValueError):
        BlockProjector(mode=ORTHOGONAL, direction=BISECT2)
    with pytest.raises(ValueError):
        BlockProjector(mode=ADAPTIVE)
    with pytest.raises(ValueError):
        BlockProjector(mode=ADAPTIVE, direction=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        adaptive_feature([1, 2], BlockProjector(mode=ORTHOGONAL))
    with pytest.raises(ValueError):
        adaptive_feature([1, 2, 3], BlockProjector.adaptive(BISECT2, 2))


def test_project_level_examples():
    level = orthogonal_level(BlockPartition.for_dims(4, 2), 2)
    got = project_level([1.0, 3.0, 2.0, 2.0], level)
    np.testing.assert_allclose(got, [2.0 * math.sqrt(2.0)] * 2, rtol=1e-12)
    np.testing.assert_array_equal(project_level(np.zeros(4), level), np.zeros(2))
    with pytest.raises(ValueError):
        project_level([1.0, 2.0, 3.0], level)


def test_level_mode_consistency():
    part = BlockPartition.for_dims(4, 2)
    mixed = (BlockProjector(mode=ORTHOGONAL), BlockProjector.adaptive(BISECT2, 2))
    with pytest.raises(ValueError):
        ProjectionLevel(partition=part, projectors=mixed, norm=as_norm_order(2))
    with pytest.raises(ValueError):
        ProjectionLevel(partition=part,
                        projectors=(BlockProjector(mode=ORTHOGONAL),),
                        norm=as_norm_order(2))


@pytest.mark.parametrize("p", [1, 2, 4, "inf"])
@pytest.mark.parametrize("mode", [ORTHOGONAL, ADAPTIVE])
def test_level_is_contraction(p, mode):
    rng = np.random.Generator(np.random.Philox(key=21))
    part = BlockPartition.for_dims(64, 16)
    fit_rows = rng.random((500, 64))
    if mode == ORTHOGONAL:
        level = orthogonal_level(part, p)
    else:
        level = fit_adaptive_level(fit_rows, part, p)
    x = rng.standard_normal((2000, 64))
    y = rng.standard_normal((2000, 64))
    norm = as_norm_order(p)
    before = distances_to_point(x - y, np.zeros(64), norm)
    after = distances_to_point(project_rows(x, level) - project_rows(y, level),
                               np.zeros(16), norm)
    assert np.all(after <= before * (1.0 + 1e-12))


@pytest.mark.parametrize("p", [1, 2, 4, "inf"])
def test_orthogonal_feature_never_exceeds_block_norm(p):
    rng = np.random.Generator(np.random.Philox(key=22))
    for _ in range(300):
        block = rng.standard_normal(4) * 10.0
        assert abs(orthogonal_feature(block, p)) <= lp_norm(block, p) * (1 + 1e-12)


@pytest.mark.parametrize("m", [2, 4, 16])
@pytest.mark.parametrize("p", [1, 2, 4, "inf"])
def test_matrix_free_equivalence(m, p):
    rng = np.random.Generator(np.random.Philox(key=23))
    mat = mean_projector_matrix(m)
    for _ in range(100):
        block = rng.standard_normal(m)
        feature = orthogonal_feature(block, p)
        assert abs(feature) == pytest.approx(lp_norm(mat @ block, p), rel=1e-12,
                                             abs=1e-300)


def test_adaptive_dominates_orthogonal_on_fitting_distribution():
    # zero-mean anisotropic blocks: the fitted direction explains more length
    rng = np.random.Generator(np.random.Philox(key=24))
    cov_half = np.diag([3.0, 1.0, 0.5, 0.25])
    blocks = rng.standard_normal((20_000, 4)) @ cov_half
    part = BlockPartition.for_dims(4, 1)
    level = fit_adaptive_level(blocks, part, 2)
    adaptive_feats = project_rows(blocks, level)[:, 0]
    orthogonal_feats = blocks.mean(axis=1) * 2.0
    norms = np.linalg.norm(blocks, axis=1)
    assert np.mean(norms - np.abs(adaptive_feats)) <= np.mean(
        norms - np.abs(orthogonal_feats))


def test_diversion_examples():
    assert diversion(BlockProjector.adaptive(BISECT2, 2), 2) == pytest.approx(0.0)
    assert diversion(BlockProjector.adaptive([1.0, 0.0], 2), 2) == pytest.approx(
        math.sqrt(2.0) - 1.0)
    got = diversion(BlockProjector.adaptive([0.6, 0.8], 2), 2)
    assert got == pytest.approx(math.sqrt(2.0) - 1.4)
    # cross-check against the explicit rank-1 matrix applied to the ones vector
    z = np.array([0.6, 0.8])
    explicit = math.sqrt(2.0) - np.linalg.norm(np.outer(z, z) @ np.ones(2))
    assert got == pytest.approx(explicit, rel=1e-12)
    with pytest.raises(ValueError):
        diversion(BlockProjector(mode=ORTHOGONAL), 2)
    with pytest.raises(ValueError):
        diversion(BlockProjector.adaptive(BISECT2, 2), 3)


def test_diversion_bounds_on_fitted_nonneg_data():
    rng = np.random.Generator(np.random.Philox(key=25))
    rows = rng.random((2000, 16))
    level = fit_adaptive_level(rows, BlockPartition.for_dims(16, 4), 2)
    values = level.diversions()
    m = level.partition.block_size
    assert np.all(values >= 0.0)
    assert np.all(values <= math.sqrt(m) - 1.0 + 1e-9)


def test_q_mapping_norm():
    assert q_mapping_norm(4, 2) == pytest.approx(2.0 ** 0)
    assert q_mapping_norm(4, 4) == pytest.approx(2.0)
    assert q_mapping_norm(16, 1) == pytest.approx(0.0625)
    for m in (2, 4, 16):
        assert q_mapping_norm(m, 2) == 1.0
        for p in (2.5, 3, 4, 8):
            assert q_mapping_norm(m, p) > 1.0
    with pytest.raises(ValueError):
        q_mapping_norm(4, "inf")
    with pytest.raises(ValueError):
        q_mapping_norm(0, 2)


def test_degenerate_block_falls_back_to_secting_direction():
    rows = np.zeros((10, 4))
    level = fit_adaptive_level(rows, BlockPartition.for_dims(4, 2), 2)
    for proj in level.projectors:
        np.testing.assert_allclose(proj.direction, BISECT2, rtol=1e-12)
    np.testing.assert_allclose(level.diversions(), np.zeros(2), atol=1e-12)


def test_fit_adaptive_level_shapes_and_flags():
    rng = np.random.Generator(np.random.Philox(key=26))
    rows = rng.random((500, 12))
    level = fit_adaptive_level(rows, BlockPartition.for_dims(12, 3), 4)
    assert level.mode == ADAPTIVE and level.dim_out == 3
    assert all(proj.converged for proj in level.projectors)
    assert all(proj.lipschitz_scale >= 1.0 for proj in level.projectors)
    feats = project_rows(rows, level)
    assert feats.shape == (500, 3)
