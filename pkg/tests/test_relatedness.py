import numpy as np
import pytest

from capdyn.model import DimensionError, ModelParams, output
from capdyn.relatedness import (
    ComplementarityMatrix,
    RelatednessWeights,
    complementarity_matrix,
    coupling_matrix,
    cross_partial_output,
    growth_coupling,
)
from capdyn.riccati import growth_rate_multi

from conftest import central_diff, mixed_central_diff, random_instance, rel_err


# ---------------------------------------------------------------- complementarity matrix


def test_weights_validation():
    with pytest.raises(ValueError):
        RelatednessWeights([0.0, 0.0])
    with pytest.raises(ValueError):
        RelatednessWeights([1.0, -0.5])
    assert np.all(RelatednessWeights.uniform(3).W == 1.0)


def test_orthogonal_columns_have_zero_complementarity():
    q = np.array([[0.6, 0.0], [0.0, 0.9]])
    assert complementarity_matrix(q).C[0, 1] == 0.0


def test_complementarity_hand_value():
    C = complementarity_matrix([[1.0, 1.0], [1.0, 0.0]], RelatednessWeights([1.0, 1.0])).C
    assert C[0, 1] == 1.0 and C[1, 0] == 1.0
    assert C[0, 0] == 2.0 and C[1, 1] == 1.0


def test_complementarity_symmetric_and_matches_sum(rng):
    q = rng.uniform(size=(7, 5))
    w = rng.uniform(0.0, 2.0, size=7)
    C = complementarity_matrix(q, w).C
    assert np.array_equal(C, C.T)
    for b in range(5):
        for b2 in range(5):
            assert C[b, b2] == pytest.approx(sum(w[p] * q[p, b] * q[p, b2] for p in range(7)), rel=1e-14)


def test_weight_scaling_keeps_argmax(rng):
    q = rng.uniform(size=(6, 4))
    w = rng.uniform(0.1, 1.0, size=6)
    base = complementarity_matrix(q, w)
    scaled = complementarity_matrix(q, 3.5 * w)
    np.testing.assert_allclose(scaled.C, 3.5 * base.C, rtol=1e-14)
    assert scaled.most_complementary_pair() == base.most_complementary_pair()


def test_off_diagonal_and_pair():
    cm = ComplementarityMatrix(np.array([[5.0, 1.0, 2.0], [1.0, 5.0, 3.0], [2.0, 3.0, 5.0]]))
    assert np.all(np.diag(cm.off_diagonal()) == 0.0)
    assert cm.most_complementary_pair() == (1, 2)
    with pytest.raises(ValueError):
        ComplementarityMatrix(np.ones((1, 1))).most_complementary_pair()


def test_complementarity_dimension_mismatch():
    with pytest.raises(DimensionError) as err:
        complementarity_matrix(np.ones((3, 2)), [1.0, 1.0])
    assert err.value.axis == "activity"


# ---------------------------------------------------------------- cross partial


def test_cross_partial_examples():
    assert cross_partial_output([[0.0, 0.7]], [[0.2, 0.3]], 0, 0, 0, 1) == 0.0
    assert cross_partial_output([[0.5, 0.5]], [[0.2, 0.3]], 0, 0, 0, 1) == 0.25
    with pytest.raises(ValueError):
        cross_partial_output([[0.5, 0.5]], [[0.2, 0.3]], 0, 0, 1, 1)


def test_cross_partial_matches_finite_differences(rng):
    h = 1e-4
    for _ in range(50):
        q, r = random_instance(rng, min_b=2)
        c = int(rng.integers(r.shape[0]))
        p = int(rng.integers(q.shape[0]))
        b, b2 = rng.choice(q.shape[1], size=2, replace=False)

        def f(dx, dy):
            rr = r.copy()
            rr[c, b] += dx
            rr[c, b2] += dy
            return output(q, np.clip(rr, 0.0, 1.0))[c, p]

        fd = mixed_central_diff(f, h)
        assert rel_err(cross_partial_output(q, r, c, p, b, b2), fd) <= 1e-5


# ---------------------------------------------------------------- growth coupling


def test_coupling_examples():
    p = ModelParams(1.0, 0.0)
    assert growth_coupling([[0.5, 0.5]], [[0.0, 0.0]], p, 0, 0, 1) == pytest.approx(0.125, abs=1e-15)
    assert growth_coupling([[0.5, 0.5]], [[1.0, 0.0]], p, 0, 0, 1) == 0.0
    assert growth_coupling([[0.5, 0.0], [0.3, 0.0]], [[0.2, 0.1]], p, 0, 0, 1) == 0.0


def test_coupling_hand_value_matches_derivative():
    q, r = np.array([[0.5, 0.5]]), np.array([[0.0, 0.0]])
    p = ModelParams(1.0, 0.0)

    def g(x):
        rr = r.copy()
        rr[0, 1] = x
        return growth_rate_multi(q, rr, p)[0, 0]

    # growth is affine in r[0, 1] here, so a one-sided difference is exact up to rounding
    assert (g(1e-3) - g(0.0)) / 1e-3 == pytest.approx(0.125, rel=1e-10)


def test_coupling_skips_activities_without_requirements():
    q = np.array([[0.0, 0.0, 0.0], [0.4, 0.6, 0.2]])
    r = np.array([[0.3, 0.5, 0.1]])
    p = ModelParams(0.7, 0.1)
    alone = growth_coupling(q[1:], r, p, 0, 0, 1)
    assert growth_coupling(q, r, p, 0, 0, 1) == alone


def test_coupling_equal_indices_and_bounds():
    p = ModelParams()
    with pytest.raises(ValueError):
        growth_coupling([[0.5, 0.5]], [[0.1, 0.1]], p, 0, 1, 1)
    with pytest.raises(IndexError):
        growth_coupling([[0.5, 0.5]], [[0.1, 0.1]], p, 0, 0, 2)


def test_coupling_matches_growth_rate_derivative(rng):
    h = 1e-6
    for _ in range(50):
        q, r = random_instance(rng, min_b=2)
        params = ModelParams(float(rng.uniform(0.2, 1.0)), float(rng.uniform(0.0, 0.5)))
        c = int(rng.integers(r.shape[0]))
        b, b2 = (int(x) for x in rng.choice(q.shape[1], size=2, replace=False))

        def g(x):
            rr = r.copy()
            rr[c, b2] = x
            return growth_rate_multi(q, rr, params)[c, b]

        fd = central_diff(g, r[c, b2], h)
        assert rel_err(growth_coupling(q, r, params, c, b, b2), fd) <= 1e-6


def test_coupling_nonnegative(rng):
    for _ in range(200):
        q, r = random_instance(rng, min_b=2, q_range=(0.0, 1.0), r_range=(0.0, 1.0))
        params = ModelParams(float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.0, 1.0)))
        M = coupling_matrix(q, r, params, 0)
        assert np.all(M >= 0.0)
        assert np.all(np.diag(M) == 0.0)


def test_coupling_monotone_in_shared_requirement(rng):
    q, r = random_instance(rng, max_p=5, min_b=3, max_b=5)
    params = ModelParams(0.8, 0.2)
    base = growth_coupling(q, r, params, 0, 0, 1)
    for p in range(q.shape[0]):
        up = q.copy()
        up[p, 1] = min(1.0, q[p, 1] + 0.05)
        assert growth_coupling(up, r, params, 0, 0, 1) > base


def test_coupling_nondecreasing_in_third_capability(rng):
    q, r = random_instance(rng, max_p=5, min_b=3, max_b=5)
    params = ModelParams(0.8, 0.2)
    base = growth_coupling(q, r, params, 0, 0, 1)
    for b3 in range(2, q.shape[1]):
        up = r.copy()
        up[0, b3] = min(1.0, r[0, b3] + 0.1)
        assert growth_coupling(q, up, params, 0, 0, 1) >= base
