import numpy as np
import pytest

from app.core.errors import UsageError
from app.services.mappings import (
    AffineMapping,
    AveragedMapping,
    QuarterTurnMapping,
    ScaleMapping,
    apply,
    averaged,
    catalog_map,
    fix_residual,
    shear_map,
)
from app.services.normed_spaces import NormedSpace, NormKind, as_vector


def test_halving_map(halving):
    np.testing.assert_allclose(apply(halving, [3.0, 2.0, 1.0]), [-1.5, -1.0, -0.5])
    assert halving.space.norm_kind is NormKind.L1


def test_quarter_turn(rotation):
    np.testing.assert_allclose(rotation([0.5, 1.0]), [-1.0, 0.5])


def test_quarter_turn_needs_the_plane():
    with pytest.raises(UsageError):
        QuarterTurnMapping(NormedSpace(dimension=3))


def test_apply_rejects_wrong_dimension(rotation):
    with pytest.raises(UsageError):
        rotation.apply([1.0, 2.0, 3.0])


def test_images_are_read_only(halving):
    image = halving.apply([1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        image[0] = 0.0


def test_matrix_quarter_map(matrix_quarter):
    image = matrix_quarter.apply([[4.0, -8.0], [0.0, 2.0]])
    np.testing.assert_allclose(image, [-1.0, 2.0, 0.0, -0.5])
    assert matrix_quarter.space.norm(image) == 2.0


def test_averaged_with_lambda_one_is_the_map(halving):
    assert averaged(halving, 1.0) is halving


def test_averaged_halving_is_a_quarter_scaling(halving):
    r_half = averaged(halving, 0.5)
    assert isinstance(r_half, AveragedMapping)
    np.testing.assert_allclose(r_half.apply([3.0, 2.0, 1.0]), [0.75, 0.5, 0.25])


def test_averaging_keeps_fixed_points():
    shear = shear_map()
    assert fix_residual(shear, [2.0, -1.0]) == 0.0
    assert fix_residual(averaged(shear, 0.3), [2.0, -1.0]) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("lam", [0.0, -0.5, 1.5])
def test_averaged_rejects_bad_lambda(halving, lam):
    with pytest.raises(UsageError):
        averaged(halving, lam)


def test_affine_mapping_shape_check():
    with pytest.raises(UsageError):
        AffineMapping(NormedSpace(dimension=2), [[1.0, 0.0, 0.0]])


def test_fix_residual_uses_the_space_norm(halving):
    assert fix_residual(halving, [2.0, 0.0, 0.0]) == pytest.approx(3.0)
    scale = ScaleMapping(NormedSpace(dimension=2, norm_kind=NormKind.LINF), 0.5)
    assert fix_residual(scale, [2.0, -4.0]) == pytest.approx(2.0)


@pytest.mark.parametrize("name", ["halving", "matrix_quarter", "quarter_turn", "shear"])
def test_catalog(name):
    mapping = catalog_map(name)
    assert mapping.describe()["kind"] in {"scale", "quarter_turn", "affine"}


def test_catalog_unknown_name():
    with pytest.raises(UsageError):
        catalog_map("nope")


@pytest.mark.parametrize("name", ["halving", "matrix_quarter", "quarter_turn", "shear"])
def test_averaged_residual_is_scaled_residual(name, rng):
    mapping = catalog_map(name)
    for lam in np.linspace(0.1, 0.9, 9):
        r_lam = averaged(mapping, lam)
        for p in rng.uniform(-10.0, 10.0, size=(100, mapping.space.dimension)):
            np.testing.assert_allclose(p - r_lam.apply(p), lam * (p - mapping.apply(p)), rtol=0, atol=1e-12)


def test_quarter_turn_is_an_isometry(rotation, rng):
    assert rotation.space.norm_kind is NormKind.L2
    for p in rng.uniform(-10.0, 10.0, size=(200, 2)):
        assert rotation.space.norm(rotation.apply(p)) == pytest.approx(rotation.space.norm(as_vector(p)), abs=1e-12)
