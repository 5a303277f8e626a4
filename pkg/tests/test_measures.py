import numpy as np
import pytest

from utils.errors import MeasureError
from utils.measures import (
    ReferencePoint,
    common_dim,
    dirac,
    in_MK,
    in_MKp,
    measures_equal,
    merge_atoms,
    moment2,
    moment_p,
    new_measure,
    normalize,
    null_measure,
    prune,
    pushforward_dilation,
    reference_point,
    resolve_reference,
    scale,
    total_mass,
)


# ==================== CONSTRUÇÃO ====================

def test_new_measure_empty_is_null():
    mu = new_measure([], [])
    assert mu.is_null
    assert mu.mass == 0.0
    assert mu.n_atoms == 0


def test_new_measure_single_dirac():
    mu = new_measure([0], [1])
    assert mu.dim == 1
    assert mu.mass == 1.0
    assert mu.points.tolist() == [[0.0]]


def test_new_measure_uniform_two_points():
    mu = new_measure([0, 1], [0.5, 0.5])
    assert mu.n_atoms == 2
    assert mu.mass == pytest.approx(1.0)


def test_new_measure_keeps_zero_weight_atoms():
    mu = new_measure([[0.0], [1.0]], [0.0, 1.0])
    assert mu.n_atoms == 2
    assert prune(mu).n_atoms == 1


@pytest.mark.parametrize(
    "points, weights",
    [
        ([0, 1], [1.0]),
        ([0], [-1.0]),
        ([np.nan], [1.0]),
        ([0.0], [np.inf]),
    ],
)
def test_new_measure_rejects_invalid(points, weights):
    with pytest.raises(MeasureError):
        new_measure(points, weights)


def test_new_measure_rejects_declared_dim_mismatch():
    with pytest.raises(MeasureError):
        new_measure([[0.0, 1.0]], [1.0], dim=3)


def test_arrays_are_read_only():
    mu = new_measure([[0.0, 1.0]], [1.0])
    with pytest.raises(ValueError):
        mu.weights[0] = 2.0


def test_total_mass_and_scale():
    mu = new_measure([0, 1], [1.0, 3.0])
    assert total_mass(mu) == 4.0
    assert scale(mu, 0.5).mass == 2.0
    with pytest.raises(MeasureError):
        scale(mu, -1.0)


# ==================== NORMALIZAÇÃO E DILATAÇÃO ====================

def test_normalize_dirac():
    assert measures_equal(normalize(dirac(1.0, 2.0)), dirac(1.0))


def test_normalize_null_is_dirac_at_reference():
    assert measures_equal(normalize(null_measure(1), 0.0), dirac(0.0))
    assert measures_equal(normalize(null_measure(2), [1.0, 2.0]), dirac([1.0, 2.0]))


def test_normalize_weights():
    mu = normalize(new_measure([0, 4], [1, 3]))
    assert mu.weights.tolist() == [0.25, 0.75]


def test_normalize_idempotent_on_probabilities(random_measure):
    mu = random_measure(mass=1.0)
    assert measures_equal(normalize(mu), mu)


def test_pushforward_dilation_examples():
    assert measures_equal(pushforward_dilation(dirac(1.0), 2.0, 0.0), dirac(2.0))
    assert measures_equal(pushforward_dilation(dirac(2.0), 3.0, 1.0), dirac(4.0))


def test_pushforward_identity_and_inverse(random_measure):
    mu = random_measure(n=6, dim=3)
    x0 = np.array([0.5, -1.0, 2.0])
    assert measures_equal(pushforward_dilation(mu, 1.0, x0), mu)
    back = pushforward_dilation(pushforward_dilation(mu, 2.5, x0), 1 / 2.5, x0)
    np.testing.assert_allclose(back.points, mu.points, rtol=1e-12, atol=1e-12)


def test_pushforward_scales_moment_and_keeps_mass(random_measure):
    mu = random_measure(n=4, dim=2)
    x0 = np.array([1.0, -1.0])
    lifted = pushforward_dilation(mu, 3.0, x0)
    assert lifted.mass == mu.mass
    assert moment2(lifted, x0) == pytest.approx(9.0 * moment2(mu, x0), rel=1e-12)


def test_pushforward_negative_factor():
    with pytest.raises(MeasureError):
        pushforward_dilation(dirac(1.0), -1.0)


# ==================== MOMENTOS E CLASSE M_K ====================

def test_moment2_examples():
    assert moment2(dirac(3.0), 3.0) == 0.0
    assert moment2(dirac(2.0, 2.0), 0.0) == 8.0
    assert moment2(new_measure([-1, 1], [1, 1]), 0.0) == 2.0
    assert moment2(null_measure(1)) == 0.0


def test_moment_p():
    assert moment_p(dirac(2.0, 3.0), 0.0, p=1) == 6.0


def test_in_MK_examples():
    assert in_MK(dirac(1.0), 1.0, 1.0)
    assert not in_MK(dirac(2.0), 1.0, 0.0)
    assert in_MK(dirac(1.0, 2.0), 1.0, 0.0)
    assert in_MK(null_measure(1), 1.0)


def test_in_MK_rejects_nonpositive_K():
    with pytest.raises(MeasureError):
        in_MK(dirac(1.0), 0.0)


def test_in_MKp_uses_p_moment():
    assert in_MKp(dirac(2.0), 2.0, 0.0, p=1)
    assert not in_MKp(dirac(2.0), 2.0, 0.0, p=3)


# ==================== CANÔNICA E REFERÊNCIA ====================

def test_merge_atoms_sums_duplicates():
    mu = new_measure([[1.0], [0.0], [1.0], [2.0]], [0.5, 1.0, 0.25, 0.0])
    merged = merge_atoms(mu)
    assert merged.points.tolist() == [[0.0], [1.0]]
    assert merged.weights.tolist() == [1.0, 0.75]


def test_measures_equal_ignores_order():
    a = new_measure([0, 1], [1, 2])
    b = new_measure([1, 0], [2, 1])
    assert measures_equal(a, b)
    assert not measures_equal(a, scale(b, 2.0))


def test_common_dim_and_null_compatibility():
    assert common_dim(null_measure(), dirac([0.0, 0.0])) == 2
    with pytest.raises(MeasureError):
        common_dim(dirac(0.0), dirac([0.0, 0.0]))


def test_resolve_reference():
    np.testing.assert_array_equal(resolve_reference(None, 3), np.zeros(3))
    np.testing.assert_array_equal(resolve_reference(0, 2), np.zeros(2))
    np.testing.assert_array_equal(resolve_reference(ReferencePoint.origin(2), 2), np.zeros(2))
    with pytest.raises(MeasureError):
        resolve_reference([1.0, 2.0], 3)
    with pytest.raises(MeasureError):
        resolve_reference(1.0, 2)


def test_reference_point():
    ref = reference_point([1.0, 2.0])
    assert ref.dim == 2
    with pytest.raises(MeasureError):
        reference_point([np.inf])
