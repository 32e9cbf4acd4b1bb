import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from app.core.errors import UsageError
from app.services.normed_spaces import (
    NormedSpace,
    NormKind,
    affine_combine,
    as_vector,
    norm,
)

coords = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
triples = st.lists(coords, min_size=3, max_size=3)
kinds = st.sampled_from(list(NormKind))


def space_of_triples(kind: NormKind) -> NormedSpace:
    if kind is NormKind.MATRIX_MAX:
        return NormedSpace.matrices(1, 3)
    return NormedSpace(dimension=3, norm_kind=kind)


@pytest.mark.parametrize(
    "kind, expected",
    [(NormKind.L1, 6.0), (NormKind.L2, np.sqrt(14.0)), (NormKind.LINF, 3.0)],
)
def test_norm_kinds(kind, expected):
    space = NormedSpace(dimension=3, norm_kind=kind)
    assert norm(space, as_vector([3.0, -2.0, 1.0])) == pytest.approx(expected)


def test_matrix_max_norm_uses_largest_entry():
    space = NormedSpace.matrices(2, 2)
    assert space.norm(as_vector([[1.0, -4.0], [2.0, 0.5]])) == 4.0


def test_matrix_max_needs_matching_shape():
    with pytest.raises(UsageError):
        NormedSpace(dimension=4, norm_kind=NormKind.MATRIX_MAX)
    with pytest.raises(UsageError):
        NormedSpace(dimension=4, norm_kind=NormKind.MATRIX_MAX, rows=3, cols=2)


def test_norm_rejects_foreign_dimension():
    space = NormedSpace(dimension=2)
    with pytest.raises(UsageError):
        space.norm(as_vector([1.0, 2.0, 3.0]))


def test_as_vector_validation():
    with pytest.raises(UsageError):
        as_vector([])
    with pytest.raises(UsageError):
        as_vector([1.0, 2.0], dimension=3)
    v = as_vector([1.0, 2.0])
    with pytest.raises(ValueError):
        v[0] = 5.0


def test_distance_is_norm_of_difference():
    space = NormedSpace(dimension=2, norm_kind=NormKind.L1)
    assert space.distance(as_vector([1.0, 1.0]), as_vector([-1.0, 2.0])) == 3.0


def test_affine_combine():
    p, q = as_vector([0.0, 4.0]), as_vector([2.0, 0.0])
    np.testing.assert_allclose(affine_combine(0.25, p, q), [0.5, 3.0])
    np.testing.assert_allclose(affine_combine(0.0, p, q), p)
    np.testing.assert_allclose(affine_combine(1.0, p, q), q)
    with pytest.raises(UsageError):
        affine_combine(1.5, p, q)
    with pytest.raises(UsageError):
        affine_combine(0.5, p, as_vector([1.0]))


@hsettings(max_examples=100, deadline=None)
@given(p=triples, q=triples, kind=kinds)
def test_triangle_inequality(p, q, kind):
    space = space_of_triples(kind)
    p, q = as_vector(p), as_vector(q)
    assert space.norm(p + q) <= space.norm(p) + space.norm(q) + 1e-9


@hsettings(max_examples=100, deadline=None)
@given(p=triples, alpha=st.floats(min_value=-10.0, max_value=10.0), kind=kinds)
def test_absolute_homogeneity(p, alpha, kind):
    space = space_of_triples(kind)
    p = as_vector(p)
    assert space.norm(alpha * p) == pytest.approx(abs(alpha) * space.norm(p), rel=1e-9, abs=1e-9)


@hsettings(max_examples=100, deadline=None)
@given(
    p=st.lists(
        st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1e3), st.floats(min_value=-1e3, max_value=-1e-6)),
        min_size=3,
        max_size=3,
    ),
    kind=kinds,
)
def test_norm_is_nonnegative_and_definite(p, kind):
    space = space_of_triples(kind)
    p = as_vector(p)
    value = space.norm(p)
    assert value >= 0.0
    assert (value == 0.0) == (not np.any(p))


@pytest.mark.parametrize("kind", list(NormKind))
def test_only_the_origin_has_zero_norm(kind):
    space = space_of_triples(kind)
    assert space.norm(as_vector([0.0, 0.0, 0.0])) == 0.0
    assert space.norm(as_vector([0.0, 1e-8, 0.0])) > 0.0


@hsettings(max_examples=100, deadline=None)
@given(p=triples, lam=st.floats(min_value=0.0, max_value=1.0))
def test_affine_combine_of_a_point_with_itself(p, lam):
    p = as_vector(p)
    np.testing.assert_allclose(affine_combine(lam, p, p), p, rtol=1e-12, atol=1e-12)
