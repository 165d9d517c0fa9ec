import numpy as np
import pytest
from scipy import stats

from segsample.catalog import aj_sampler, aj_segment_set, ccv_segment_set, lh_segment_set
from segsample.errors import EmptyEdgeSet, ValidationError
from segsample.sampling import (
    comonotone_source,
    conditional_cdf,
    draw,
    draw_generalized,
    glh_sample,
    iid_source,
    joint_cdf,
)
from segsample.segments import SegmentSet
from segsample.streams import make_rng


def test_draw_antithetic(antithetic):
    U = draw(antithetic, 10_000, 1).samples
    np.testing.assert_array_equal(U[:, 1], 1.0 - U[:, 0])


def test_draw_ccv_sum():
    U = draw(ccv_segment_set(5, (1,)), 10_000, 2).samples
    np.testing.assert_allclose(U.sum(axis=1), 2.5, atol=1e-12)


def test_draw_marginals_ks():
    U = draw(aj_segment_set(4, 3), 100_000, 3).samples
    for l in range(4):
        assert stats.kstest(U[:, l], "uniform").pvalue > 0.01


def test_draw_reproducible():
    S = ccv_segment_set(4, (1, 2))
    a, b = draw(S, 500, 42).samples, draw(S, 500, 42).samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, draw(S, 500, 43).samples)


def test_draw_rejects_nonuniform_and_empty():
    from conftest import example_square

    with pytest.raises(ValidationError):
        draw(example_square(0.5), 10, 0)
    draw(example_square(0.5), 10, 0, force=True)
    empty = SegmentSet(np.array([[0.0, 1.0]]), np.zeros((0, 2), dtype=np.int64))
    with pytest.raises(EmptyEdgeSet):
        draw(empty, 10, 0)


def test_generalized_lh_stratification():
    U = draw_generalized(lh_segment_set(2), iid_source(2), 10_000, 4).samples
    # one coordinate in each half of [0, 1]
    low = (U < 0.5).sum(axis=1)
    assert np.all(low == 1)


def test_comonotone_source_matches_draw():
    S = aj_segment_set(3, 3)
    A = draw(S, 50_000, 5).samples
    B = draw_generalized(S, comonotone_source(3), 50_000, 6).samples
    for l in range(3):
        assert stats.ks_2samp(A[:, l], B[:, l]).pvalue > 0.01
    assert stats.ks_2samp(A.sum(axis=1), B.sum(axis=1)).pvalue > 0.01


def test_generalized_ctm_source_on_lh():
    src = lambda n, rng: aj_sampler(4, 2, n, rng)
    U = draw_generalized(lh_segment_set(4), src, 50_000, 7).samples
    np.testing.assert_allclose(U.sum(axis=1), 2.0, atol=1e-12)
    for l in range(4):
        assert stats.kstest(U[:, l], "uniform").pvalue > 0.01


def test_glh():
    g = glh_sample(1, 8, seed=1, keep_permutations=True)
    assert g.U.shape == (1, 8)
    np.testing.assert_array_equal(np.floor(np.sort(g.U[0]) * 8), np.arange(8))
    g = glh_sample(200, 6, seed=2)
    np.testing.assert_array_equal(np.sort(np.floor(g.U * 6), axis=1), np.tile(np.arange(6), (200, 1)))
    from segsample.catalog import rbs_sampler

    g = glh_sample(20_000, 5, base=lambda n, rng: rbs_sampler(5, n, rng), seed=3)
    assert stats.kstest(g.U[:, 2], "uniform").pvalue > 0.01


def test_cdf_antithetic(antithetic):
    assert conditional_cdf(antithetic, 1, [0.5, 0.5]) == 0.0
    assert conditional_cdf(antithetic, 1, [1.0, 1.0]) == 1.0


def test_conditional_cdf_monte_carlo():
    S = ccv_segment_set(3, (1,))
    u = np.array([0.4, 0.9, 1.0])
    k = 1
    i, j = S.edges[k - 1]
    V = make_rng(8).random(10**6)[:, None]
    U = S.X[:, i - 1] * V + S.X[:, j - 1] * (1 - V)
    p = np.all(U <= u, axis=1).mean()
    se = np.sqrt(max(p * (1 - p), 1e-12) / V.size)
    assert abs(conditional_cdf(S, k, u) - p) <= 3 * se + 1e-12


def test_joint_cdf():
    S = aj_segment_set(3, 2)
    assert joint_cdf(S, [1, 1, 1]) == 1.0
    assert joint_cdf(S, [1, 0.37, 1]) == pytest.approx(0.37)
    U = draw(S, 10**6, 9).samples
    for u in ([0.3, 0.6, 0.8], [0.6, 0.7, 0.9], [0.9, 0.8, 0.5]):
        p = np.all(U <= np.array(u), axis=1).mean()
        assert abs(joint_cdf(S, u) - p) <= 3 * np.sqrt(p * (1 - p) / 10**6) + 1e-12


def test_joint_cdf_grid_monotone():
    S = ccv_segment_set(3, (1,))
    g = np.linspace(0, 1, 11)
    F = np.array([[[joint_cdf(S, [a, b, c]) for c in g] for b in g] for a in g])
    for ax in range(3):
        assert np.all(np.diff(F, axis=ax) >= -1e-12)
    assert F[0, 0, 0] == 0.0 and F[-1, -1, -1] == 1.0
