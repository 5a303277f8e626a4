import numpy as np
import pytest

from utils.barycenter import (
    barycenter_problem,
    quantile_barycenter_1d,
    variance,
    w2_barycenter,
    wop_barycenter,
)
from utils.errors import ConfigError
from utils.measures import dirac, measures_equal, new_measure, normalize, null_measure, scale
from utils.ot_core import solve_w2_exact


@pytest.fixture
def dirac_problem():
    return barycenter_problem([(0.5, dirac(0.0, 1.0)), (0.5, dirac(4.0, 3.0))], x0=0.0)


def w2(mu, nu):
    return np.sqrt(max(solve_w2_exact(mu, nu)[0], 0.0))


# ==================== PROBLEMA E VARIÂNCIA ====================

def test_problem_rejects_bad_weights():
    with pytest.raises(ConfigError):
        barycenter_problem([(0.5, dirac(0.0)), (0.4, dirac(1.0))])
    with pytest.raises(ConfigError):
        barycenter_problem([(1.5, dirac(0.0)), (-0.5, dirac(1.0))])
    with pytest.raises(ConfigError):
        barycenter_problem([])


def test_variance_single_entry(random_measure):
    mu = random_measure()
    problem = barycenter_problem([(1.0, mu)])
    assert variance(mu, problem) == pytest.approx(0.0, abs=1e-12)


def test_variance_unit_diracs():
    problem = barycenter_problem([(0.5, dirac(0.0)), (0.5, dirac(2.0))], x0=0.0)
    assert variance(dirac(1.0), problem) == pytest.approx(1.0)


def test_variance_lifted_diracs(dirac_problem):
    assert variance(dirac(3.0, 2.0), dirac_problem) == pytest.approx(37.0)


# ==================== BARICENTRO WOP ====================

def test_wop_barycenter_of_diracs(dirac_problem):
    result = wop_barycenter(dirac_problem)
    assert result.converged
    assert not result.degenerate
    assert measures_equal(result.measure, dirac(3.0, 2.0), atol=1e-8)


def test_wop_barycenter_is_locally_optimal(dirac_problem, rng):
    best = variance(wop_barycenter(dirac_problem).measure, dirac_problem)
    for _ in range(20):
        mass = 2.0 + rng.uniform(-0.1, 0.1)
        point = 3.0 + rng.uniform(-0.1, 0.1)
        assert variance(dirac(point, mass), dirac_problem) >= best - 1e-10


def test_wop_barycenter_single_entry(random_measure):
    mu = random_measure()
    result = wop_barycenter(barycenter_problem([(1.0, mu)]))
    assert measures_equal(result.measure, mu, atol=1e-12)


def test_wop_barycenter_identical_entries(random_measure):
    mu = random_measure()
    result = wop_barycenter(barycenter_problem([(0.3, mu), (0.7, mu)]))
    assert result.converged
    assert measures_equal(result.measure, mu, atol=1e-9)


def test_wop_barycenter_reference_independence(random_measure):
    entries = [(0.2, random_measure()), (0.5, random_measure()), (0.3, random_measure())]
    a = wop_barycenter(barycenter_problem(entries, x0=[0.0, 0.0])).measure
    b = wop_barycenter(barycenter_problem(entries, x0=[5.0, 0.0])).measure
    np.testing.assert_allclose(a.points, b.points, atol=1e-9)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-9)


def test_wop_barycenter_mass_and_shape_1d(rng):
    measures = [new_measure(rng.normal(size=n), rng.uniform(0.2, 1.0, size=n)) for n in (4, 6, 5)]
    lambdas = np.array([0.2, 0.5, 0.3])
    result = wop_barycenter(barycenter_problem(list(zip(lambdas, measures))))
    masses = np.array([mu.mass for mu in measures])
    total = float(lambdas @ masses)
    oracle = quantile_barycenter_1d(lambdas * masses / total, [normalize(mu) for mu in measures])
    assert result.measure.mass == pytest.approx(total, rel=1e-12)
    assert w2(normalize(result.measure), oracle) <= 1e-6


def test_wop_barycenter_1d_fixed_point_matches_quantiles(rng):
    n = 5
    measures = [new_measure(rng.normal(loc=k, size=n), np.full(n, m / n)) for k, m in enumerate((1.0, 2.5, 0.5))]
    lambdas = np.array([0.2, 0.5, 0.3])
    result = wop_barycenter(barycenter_problem(list(zip(lambdas, measures))), quantile_fast_path=False)
    masses = np.array([mu.mass for mu in measures])
    total = float(lambdas @ masses)
    oracle = quantile_barycenter_1d(lambdas * masses / total, [normalize(mu) for mu in measures])
    assert result.converged
    assert result.iterations >= 1
    assert result.measure.mass == pytest.approx(total, rel=1e-12)
    assert w2(normalize(result.measure), oracle) <= 1e-6


def test_wop_barycenter_skips_null_entries():
    result = wop_barycenter(barycenter_problem([(0.5, null_measure(1)), (0.5, dirac(1.0, 2.0))]))
    assert measures_equal(result.measure, dirac(1.0, 1.0), atol=1e-12)


def test_wop_barycenter_all_null():
    result = wop_barycenter(barycenter_problem([(0.5, null_measure(2)), (0.5, null_measure(2))]))
    assert result.degenerate
    assert result.measure.is_null
    assert result.measure.dim == 2


def test_unit_mass_reduces_to_w2_barycenter(random_measure):
    measures = [random_measure(n=4, mass=1.0) for _ in range(3)]
    lambdas = [0.25, 0.25, 0.5]
    wop_result = wop_barycenter(barycenter_problem(list(zip(lambdas, measures))))
    w2_result = w2_barycenter(lambdas, measures)
    assert wop_result.measure.mass == pytest.approx(1.0, rel=1e-12)
    assert w2(wop_result.measure, scale(w2_result.measure, wop_result.measure.mass)) <= 1e-6


# ==================== BARICENTRO W2 ====================

def test_w2_barycenter_single_input(random_measure):
    mu = random_measure(mass=1.0)
    result = w2_barycenter([1.0], [mu])
    assert result.converged
    assert measures_equal(result.measure, mu)


def test_w2_barycenter_two_diracs():
    a, b = np.array([1.0, -2.0]), np.array([3.0, 4.0])
    result = w2_barycenter([0.3, 0.7], [dirac(a), dirac(b)])
    assert result.converged
    assert measures_equal(result.measure, dirac(0.3 * a + 0.7 * b), atol=1e-12)


def test_w2_barycenter_fixed_point_matches_quantiles(rng):
    n = 6
    lines = [rng.normal(loc=k, size=n) for k in range(3)]
    weights = [0.5, 0.3, 0.2]
    embedded = [new_measure(np.column_stack([x, np.zeros(n)]), np.full(n, 1 / n)) for x in lines]
    result = w2_barycenter(weights, embedded)
    oracle = quantile_barycenter_1d(weights, [new_measure(x, np.full(n, 1 / n)) for x in lines])
    assert result.converged
    np.testing.assert_allclose(result.measure.points[:, 1], 0.0, atol=1e-12)
    flattened = new_measure(result.measure.points[:, :1], result.measure.weights)
    assert w2(flattened, oracle) <= 1e-6


def test_quantile_barycenter_of_translates():
    mu = new_measure([0.0, 1.0, 3.0], [0.2, 0.5, 0.3])
    shifted = new_measure([2.0, 3.0, 5.0], [0.2, 0.5, 0.3])
    result = quantile_barycenter_1d([0.5, 0.5], [mu, shifted])
    assert measures_equal(result, new_measure([1.0, 2.0, 4.0], [0.2, 0.5, 0.3]), atol=1e-12)


def test_w2_barycenter_reports_non_convergence(random_measure, caplog):
    measures = [random_measure(n=5, mass=1.0) for _ in range(2)]
    result = w2_barycenter([0.5, 0.5], measures, max_iter=1, tol=0.0)
    assert not result.converged
    assert result.iterations == 1
    assert "não convergiu" in caplog.text


def test_w2_barycenter_rejects_bad_weights(random_measure):
    with pytest.raises(ConfigError):
        w2_barycenter([0.5], [random_measure(mass=1.0), random_measure(mass=1.0)])
    with pytest.raises(ConfigError):
        w2_barycenter([0.7, 0.7], [random_measure(mass=1.0), random_measure(mass=1.0)])
