import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from app.core.errors import UsageError
from app.services.comparison_functions import ComparisonFn, evaluate
from app.services.contraction_verifier import (
    BoxSampler,
    ContractionParams,
    averaged_bound,
    check_pair,
    interpolative_factors,
    lhs_common,
    lhs_enriched,
    lhs_interpolative,
    rhs_common,
    rhs_enriched,
    rhs_interpolative,
    sample_verify,
)
from app.services.iteration_engine import lambda_from_k
from app.services.mappings import ScaleMapping, averaged, catalog_map, shear_map
from app.services.normed_spaces import NormedSpace

X = [2.0, 2.0, 2.0]
Y = [-2.0, -2.0, -2.0]
PLAIN = ContractionParams(a=0.125, b=0.5, c=0.125, k=0.0)
ZETA_14 = ComparisonFn.linear(1.0 / 14.0)
MATRIX_PARAMS = ContractionParams(a=0.3, b=0.3, c=0.3, k=0.25)
ZETA_2_3 = ComparisonFn.linear(2.0 / 3.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"a": 0.0, "b": 0.3, "c": 0.3},
        {"a": 0.4, "b": 0.4, "c": 0.2},
        {"a": 0.3, "b": 0.3, "c": 0.3, "k": -0.5},
        {"a": 1.2, "b": 0.1, "c": 0.1},
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(UsageError):
        ContractionParams(**kwargs)


def test_params_mean_exponent():
    assert MATRIX_PARAMS.d == pytest.approx(0.1)


def test_plain_condition_factors_at_the_separating_pair(halving):
    factors = interpolative_factors(PLAIN, halving, X, Y)
    np.testing.assert_allclose(factors, [3.4641016151, 1.3160740130, 1.3160740130, 1.3160740130], rtol=1e-9)
    assert float(np.prod(factors)) == pytest.approx(7.8964440777, rel=1e-9)


def test_plain_condition_fails_at_the_separating_pair(halving):
    lhs = lhs_interpolative(halving, X, Y)
    rhs = rhs_interpolative(PLAIN, ZETA_14, halving, X, Y)
    assert lhs == pytest.approx(6.0)
    assert rhs == pytest.approx(0.5640317198, rel=1e-9)
    assert evaluate(ZETA_14, 13.67664) == pytest.approx(0.9769028571, rel=1e-9)
    assert lhs > rhs


def test_enriched_condition_with_k_zero_matches_plain(halving):
    assert lhs_enriched(PLAIN, halving, X, Y) == pytest.approx(lhs_interpolative(halving, X, Y))
    assert rhs_enriched(PLAIN, ZETA_14, halving, X, Y) == pytest.approx(
        rhs_interpolative(PLAIN, ZETA_14, halving, X, Y)
    )


def test_enriched_shift_removes_the_violation(halving):
    params = ContractionParams(a=0.125, b=0.5, c=0.125, k=0.5)
    assert lhs_enriched(params, halving, X, Y) == 0.0
    assert check_pair(params, ZETA_14, halving, X, Y).holds


def test_common_forms_reduce_to_enriched_for_one_map(halving):
    assert lhs_common(MATRIX_PARAMS, halving, halving, X, [1.0, 0.0, 0.0]) == lhs_enriched(
        MATRIX_PARAMS, halving, X, [1.0, 0.0, 0.0]
    )
    assert rhs_common(MATRIX_PARAMS, ZETA_2_3, halving, halving, X, [1.0, 0.0, 0.0]) == rhs_enriched(
        MATRIX_PARAMS, ZETA_2_3, halving, X, [1.0, 0.0, 0.0]
    )


def test_check_pair_skips_fixed_points(halving):
    result = check_pair(PLAIN, ZETA_14, halving, [0.0, 0.0, 0.0], X)
    assert result.skipped
    assert result.holds


def test_check_pair_reports_violation(halving):
    result = check_pair(PLAIN, ZETA_14, halving, X, Y, index=3)
    assert not result.holds
    assert result.index == 3
    assert result.margin < 0.0


def test_matrix_map_satisfies_enriched_condition(matrix_quarter):
    report = sample_verify(MATRIX_PARAMS, ZETA_2_3, matrix_quarter, BoxSampler(lo=-5.0, hi=5.0, n_pairs=500))
    assert report.n_pairs == 500
    assert report.n_violations == 0
    assert report.witnesses == []
    assert report.worst_margin >= 0.0


def test_sample_verify_is_deterministic(halving):
    sampler = BoxSampler(lo=-5.0, hi=5.0, n_pairs=200, seed=7)
    first = sample_verify(PLAIN, ZETA_14, halving, sampler)
    second = sample_verify(PLAIN, ZETA_14, halving, sampler)
    threaded = sample_verify(PLAIN, ZETA_14, halving, sampler, workers=4)
    assert first.model_dump() == second.model_dump() == threaded.model_dump()


def test_injected_pair_comes_first(halving):
    sampler = BoxSampler(lo=-5.0, hi=5.0, n_pairs=50, pairs=((tuple(X), tuple(Y)),))
    report = sample_verify(PLAIN, ZETA_14, halving, sampler)
    assert report.n_pairs == 51
    assert report.n_violations >= 1
    witness = report.witnesses[0]
    assert witness.index == 0
    assert witness.lhs == pytest.approx(6.0)
    assert report.to_json_dict()["witnesses"][0] == {
        "p": X, "q": Y, "lhs": witness.lhs, "rhs": witness.rhs
    }


def test_witnesses_are_capped(halving):
    sampler = BoxSampler(lo=-5.0, hi=5.0, n_pairs=300)
    report = sample_verify(PLAIN, ZETA_14, halving, sampler, max_witnesses=5)
    assert report.n_violations > 5
    assert len(report.witnesses) == 5
    indices = [w.index for w in report.witnesses]
    assert indices == sorted(indices)


def test_all_pairs_skipped_gives_zero_margin():
    identity = ScaleMapping(NormedSpace(dimension=2), 1.0)
    report = sample_verify(PLAIN, ZETA_14, identity, BoxSampler(lo=-1.0, hi=1.0, n_pairs=20))
    assert report.n_skipped == 20
    assert report.n_violations == 0
    assert report.worst_margin == 0.0


def test_zero_volume_box_is_rejected(halving):
    with pytest.raises(UsageError):
        sample_verify(PLAIN, ZETA_14, halving, BoxSampler(lo=1.0, hi=1.0, n_pairs=5))


def test_sampler_needs_pairs():
    with pytest.raises(UsageError):
        BoxSampler(lo=-1.0, hi=1.0, n_pairs=0)


def test_averaged_bound_scales_rhs(halving):
    params = ContractionParams(a=0.125, b=0.5, c=0.125, k=0.5)
    assert averaged_bound(params, ZETA_14, halving, X, [1.0, 0.0, 0.0]) == pytest.approx(
        lambda_from_k(0.5) * rhs_enriched(params, ZETA_14, halving, X, [1.0, 0.0, 0.0])
    )


point = st.lists(st.floats(min_value=-10.0, max_value=10.0), min_size=2, max_size=2)


@hsettings(max_examples=100, deadline=None)
@given(p=point, q=point, k=st.floats(min_value=0.0, max_value=5.0))
def test_averaged_map_difference_is_scaled_enriched_lhs(p, q, k):
    shear = shear_map()
    params = ContractionParams(a=0.2, b=0.2, c=0.2, k=k)
    lam = lambda_from_k(k)
    r_lam = averaged(shear, lam)
    diff = shear.space.norm(r_lam.apply(p) - r_lam.apply(q))
    assert diff == pytest.approx(lam * lhs_enriched(params, shear, p, q), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("name", ["halving", "matrix_quarter", "quarter_turn", "shear"])
def test_enriched_with_k_zero_reduces_to_plain_on_random_pairs(name, rng):
    mapping = catalog_map(name)
    params = ContractionParams(a=0.2, b=0.3, c=0.1, k=0.0)
    d = mapping.space.dimension
    for p, q in zip(rng.uniform(-5.0, 5.0, size=(1000, d)), rng.uniform(-5.0, 5.0, size=(1000, d))):
        assert lhs_enriched(params, mapping, p, q) == pytest.approx(lhs_interpolative(mapping, p, q), rel=1e-12)
        assert rhs_enriched(params, ZETA_2_3, mapping, p, q) == pytest.approx(
            rhs_interpolative(params, ZETA_2_3, mapping, p, q), rel=1e-12
        )


@hsettings(max_examples=100, deadline=None)
@given(p=point, q=point, k=st.floats(min_value=0.0, max_value=3.0))
def test_sides_are_symmetric_under_swapping_the_pair(p, q, k):
    shear = shear_map()
    params = ContractionParams(a=0.1, b=0.3, c=0.4, k=k)
    mirrored = ContractionParams(a=0.4, b=0.3, c=0.1, k=k)
    assert lhs_enriched(params, shear, p, q) == lhs_enriched(params, shear, q, p)
    assert rhs_enriched(params, ZETA_2_3, shear, p, q) == pytest.approx(
        rhs_enriched(mirrored, ZETA_2_3, shear, q, p), rel=1e-12, abs=1e-300
    )
