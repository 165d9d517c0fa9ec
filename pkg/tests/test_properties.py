import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from segsample.catalog import aj_segment_set, ccv_segment_set, ilh_iterate, rbs_sampler
from segsample.concordance import halfplane_area, halfplane_area_batch, kendall_tau_exact, kendall_tau_min
from segsample.optimizer import psi_value_grad
from segsample.sampling import draw, joint_cdf
from segsample.segments import build_segment_set, project_coordinate, reconstruct_row, uniformity_residuals
from segsample.streams import make_rng
from segsample.transforms import permute_segments, permute_vector, reflect, stochastic_compose

unit = st.floats(0.0, 1.0, allow_nan=False)
dims = st.integers(2, 7)


@st.composite
def ccv_sets(draw_, max_d=7):
    d = draw_(st.integers(2, max_d))
    k = draw_(st.integers(1, d // 2))
    offs = draw_(st.lists(st.integers(1, d // 2), min_size=1, max_size=k, unique=True))
    return ccv_segment_set(d, tuple(sorted(offs)))


@st.composite
def vector_and_subset(draw_):
    d = draw_(dims)
    u = draw_(arrays(float, d, elements=unit))
    L = draw_(st.lists(st.integers(1, d), unique=True))
    return u, L


@given(vector_and_subset())
def test_reflect_is_involution(args):
    u, L = args
    # 1 - (1 - u) rounds to within one ulp of 1
    np.testing.assert_allclose(reflect(reflect(u, L), L), u, rtol=0, atol=np.finfo(float).eps)


@given(ccv_sets(), st.data())
def test_reflection_keeps_uniform_marginals(S, data):
    L = data.draw(st.lists(st.integers(1, S.d), unique=True))
    R = build_segment_set(reflect(S.X.T, L).T, S.edges)
    assert uniformity_residuals(R).is_uniform()


@given(dims.flatmap(lambda d: st.tuples(arrays(float, d, elements=unit), st.permutations(range(1, d + 1)))))
def test_permutation_preserves_sum(args):
    u, pi = args
    w = permute_vector(u, pi)
    assert abs(w.sum() - u.sum()) < 1e-12
    np.testing.assert_array_equal(np.sort(w), np.sort(u))


@given(ccv_sets(), st.data())
def test_permuted_set_keeps_constant_sum(S, data):
    pi = data.draw(st.permutations(range(1, S.d + 1)))
    rep = uniformity_residuals(permute_segments(S, pi))
    assert rep.is_uniform() and rep.is_ctm()


@given(st.integers(2, 5), st.integers(2, 4), st.data())
def test_projection_round_trip(d, b, data):
    S = aj_segment_set(d, b)
    l = data.draw(st.integers(1, d))
    P = project_coordinate(S, l)
    np.testing.assert_allclose(reconstruct_row(P), S.X[l - 1], atol=1e-12)
    assert P.counts.sum() + len(P.self_loops) == S.n_edges


def _interior(k, data):
    a = np.sort(np.array(data.draw(st.lists(st.floats(0.02, 0.98), min_size=k, max_size=k))))
    assume(k == 0 or np.min(np.diff(np.concatenate(([0.0], a, [1.0])))) > 0.01)
    return a


@given(st.sampled_from([(4, 3, 2), (3, 4, 1), (5, 2, 3)]), st.data())
def test_psi_gradient_matches_finite_differences(case, data):
    d, b, l = case
    P = project_coordinate(aj_segment_set(d, b), l)
    k = P.n_values - 2
    a = _interior(k, data)
    _, g = psi_value_grad(P, a)
    h = 1e-7
    fd = np.array([(psi_value_grad(P, a + h * e)[0] - psi_value_grad(P, a - h * e)[0]) / (2 * h) for e in np.eye(k)])
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-6)


@given(st.sampled_from([(4, 3, 2), (3, 4, 1), (5, 2, 3)]), st.data())
def test_psi_midpoint_convex(case, data):
    d, b, l = case
    P = project_coordinate(aj_segment_set(d, b), l)
    k = P.n_values - 2
    a, c = _interior(k, data), _interior(k, data)
    mid = psi_value_grad(P, (a + c) / 2)[0]
    assert mid <= (psi_value_grad(P, a)[0] + psi_value_grad(P, c)[0]) / 2 + 1e-12


@given(st.sampled_from([(3, 2), (4, 3), (3, 5)]), arrays(float, 3, elements=unit), arrays(float, 3, elements=unit))
def test_joint_cdf_monotone_and_bounded(db, u, du):
    d, b = db
    S = aj_segment_set(d, b)
    u = np.resize(u, d)
    v = np.minimum(1.0, u + np.resize(du, d) / 4)
    Fu, Fv = joint_cdf(S, u), joint_cdf(S, v)
    assert -1e-12 <= Fu <= Fv + 1e-12 <= 1 + 2e-12
    assert Fu <= u.min() + 1e-12


@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_ilh_preserves_constant_sum(d, seed):
    rng = make_rng(seed)
    U = rbs_sampler(d, 50, rng)
    for _ in range(3):
        U = ilh_iterate(U, rng)
    np.testing.assert_allclose(U.sum(axis=1), d / 2, atol=1e-10)
    assert U.min() >= 0 and U.max() <= 1


@given(ccv_sets(), st.integers(0, 2**32 - 1))
def test_draws_inside_cube_with_constant_sum(S, seed):
    U = draw(S, 200, seed).samples
    assert U.min() >= 0 and U.max() <= 1
    np.testing.assert_allclose(U.sum(axis=1), S.d / 2, atol=1e-12)


@given(st.integers(2, 6), st.data())
def test_stochastic_composition_keeps_uniformity(d, data):
    offsets = st.lists(st.integers(1, d // 2), min_size=1, unique=True).map(lambda o: tuple(sorted(o)))
    S1 = ccv_segment_set(d, data.draw(offsets))
    S2 = aj_segment_set(d, data.draw(st.integers(2, 3)))
    assert uniformity_residuals(stochastic_compose(S1, S2)).is_uniform()


@given(ccv_sets(max_d=5))
def test_constant_sum_sets_attain_tau_min(S):
    assert abs(kendall_tau_exact(S) - kendall_tau_min(S.d)) < 1e-9


@given(arrays(float, (5, 3), elements=st.floats(-2, 2)))
def test_halfplane_batch_matches_scalar(abc):
    a, b, c = abc[:, 0], abc[:, 1], abc[:, 2]
    assert abs(halfplane_area_batch(a[None], b[None], c[None])[0] - halfplane_area(a, b, c)) < 1e-12
