import numpy as np
import pytest

from utils.errors import ConfigError, MeasureError
from utils.measures import dirac, moment2, normalize, null_measure, pushforward_dilation, scale
from utils.tangent import (
    FirstVariationOracle,
    TangentVector,
    check_oracle_consistency,
    directional_derivative_check,
    extend_functional,
    extended_entropy_grid,
    flow_particles,
    heat_equation_grid,
    heat_flow_grid,
    inner_product,
    is_conservative,
    mass_moment_functional,
    normalized_moment_functional,
    perturb,
    potential_energy_functional,
    probability_potential_energy,
    quadratic_interaction_energy,
    scaled_moment_functional,
    total_mass_functional,
    wop_gradient,
)

X0 = np.array([0.5, -0.5])


def shifted_quadratic(X):
    X = np.atleast_2d(X)
    return 0.5 * np.sum(X ** 2, axis=1) + X[:, 0]


def shifted_quadratic_grad(X):
    X = np.atleast_2d(X)
    grad = X.copy()
    grad[:, 0] += 1.0
    return grad


def random_tangent(rng, mu):
    return TangentVector(rng.normal(size=mu.points.shape), float(rng.normal()))


# ==================== PRODUTO INTERNO ====================

def test_inner_product_pure_mass_at_reference():
    v = TangentVector(np.zeros((1, 2)), 1.0)
    mu = dirac(X0)
    assert inner_product(v, v, mu, X0) == pytest.approx(1.0)


def test_inner_product_pure_velocity(random_measure, rng):
    mu = random_measure(mass=1.0)
    u = rng.normal(size=mu.points.shape)
    v = TangentVector(u, 0.0)
    expected = float(np.dot(mu.weights, np.sum(u ** 2, axis=1)))
    assert inner_product(v, v, mu) == pytest.approx(expected, rel=1e-12)


def test_inner_product_mass_rate_at_dirac():
    v = TangentVector(np.zeros((1, 1)), 1.0)
    assert inner_product(v, v, dirac(1.0), 0.0) == pytest.approx(2.0)


def test_inner_product_symmetric_and_psd(random_measure, rng):
    mu = random_measure()
    for _ in range(10):
        v1, v2 = random_tangent(rng, mu), random_tangent(rng, mu)
        assert inner_product(v1, v2, mu, X0) == pytest.approx(inner_product(v2, v1, mu, X0), rel=1e-12)
        assert inner_product(v1, v1, mu, X0) >= 0.0


def test_inner_product_requires_mass():
    v = TangentVector(np.zeros((0, 1)), 1.0)
    with pytest.raises(MeasureError):
        inner_product(v, v, null_measure(1))


# ==================== GRADIENTE ====================

def test_gradient_of_total_mass(random_measure):
    mu = random_measure()
    grad = wop_gradient(total_mass_functional(), mu, X0)
    assert grad.m_prime == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(grad.u, -(mu.points - X0) / mu.mass, atol=1e-10)


def test_gradient_of_mass_moment(random_measure):
    mu = random_measure()
    grad = wop_gradient(mass_moment_functional(X0), mu, X0)
    assert grad.m_prime == pytest.approx(mu.mass, abs=1e-10)
    np.testing.assert_allclose(grad.u, 0.0, atol=1e-10)


def test_gradient_of_scaled_moment(random_measure):
    mu = random_measure()
    grad = wop_gradient(scaled_moment_functional(X0), mu, X0)
    assert grad.m_prime == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(grad.u, mu.points - X0, atol=1e-10)


def test_gradient_of_normalized_moment(random_measure):
    mu = random_measure()
    m, m_bar = mu.mass, moment2(normalize(mu), X0)
    grad = wop_gradient(normalized_moment_functional(X0), mu, X0)
    assert grad.m_prime == pytest.approx(-m_bar / m, abs=1e-10)
    np.testing.assert_allclose(grad.u, (1 + m_bar) * (mu.points - X0) / m ** 2, atol=1e-10)


def test_gradient_requires_growth_flag(random_measure):
    oracle = FirstVariationOracle(lambda mu, X: np.zeros(len(X)), lambda mu, X: np.zeros_like(X))
    with pytest.raises(ConfigError):
        wop_gradient(oracle, random_measure())


def test_gradient_requires_mass():
    with pytest.raises(MeasureError):
        wop_gradient(total_mass_functional(), null_measure(1))


@pytest.mark.parametrize(
    "make",
    [total_mass_functional, lambda: mass_moment_functional(X0), lambda: scaled_moment_functional(X0),
     lambda: normalized_moment_functional(X0), quadratic_interaction_energy],
)
def test_oracles_are_consistent(random_measure, rng, make):
    mu = random_measure()
    assert check_oracle_consistency(make().oracle, mu, rng.normal(size=(5, 2))) <= 1e-4


# ==================== DERIVADA DIRECIONAL ====================

def test_directional_derivative_zero_vector(random_measure):
    mu = random_measure()
    lhs, rhs = directional_derivative_check(scaled_moment_functional(X0), mu, TangentVector.zero(mu), X0)
    assert lhs == 0.0
    assert rhs == pytest.approx(0.0, abs=1e-12)


def test_directional_derivative_total_mass():
    mu = dirac(1.0)
    lhs, rhs = directional_derivative_check(total_mass_functional(), mu, TangentVector(np.zeros((1, 1)), 1.0), 0.0)
    assert lhs == pytest.approx(1.0, abs=1e-9)
    assert rhs == pytest.approx(1.0, abs=1e-12)


def test_directional_derivative_scaled_moment_at_dirac():
    mu = dirac(1.0)
    v = TangentVector(np.array([[1.0]]), 0.0)
    for dt in (1e-3, 1e-4):
        lhs, rhs = directional_derivative_check(scaled_moment_functional(0.0), mu, v, 0.0, dt)
        assert rhs == pytest.approx(1.0, abs=1e-12)
        assert lhs == pytest.approx(1.0 + dt / 2, abs=1e-9)


@pytest.mark.parametrize(
    "make",
    [lambda: mass_moment_functional(X0), lambda: scaled_moment_functional(X0),
     lambda: normalized_moment_functional(X0)],
)
def test_directional_derivative_first_order(random_measure, rng, make):
    F = make()
    for _ in range(10):
        mu = random_measure()
        v = random_tangent(rng, mu)
        errors = []
        for dt in (1e-4, 5e-5):
            lhs, rhs = directional_derivative_check(F, mu, v, X0, dt)
            errors.append(abs(lhs - rhs))
        assert 1.5 <= errors[0] / errors[1] <= 2.5


def test_perturb_rejects_negative_mass():
    with pytest.raises(MeasureError):
        perturb(dirac(0.0), TangentVector(np.zeros((1, 1)), -10.0), 1.0)


# ==================== EXTENSÃO E CONSERVAÇÃO ====================

@pytest.fixture
def extended_potential():
    return extend_functional(probability_potential_energy(shifted_quadratic, shifted_quadratic_grad), X0)


def test_extension_coincides_on_probabilities(random_measure, extended_potential):
    sigma = random_measure(mass=1.0)
    base = probability_potential_energy(shifted_quadratic, shifted_quadratic_grad)
    assert extended_potential.evaluate(sigma) == pytest.approx(base.evaluate(sigma), rel=1e-12)


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_extension_mass_invariance(random_measure, extended_potential, a):
    mu = random_measure()
    moved = scale(pushforward_dilation(mu, 1 / a, X0), a)
    assert extended_potential.evaluate(moved) == pytest.approx(extended_potential.evaluate(mu), rel=1e-10)


def test_extension_is_conservative(random_measure, extended_potential):
    samples = [random_measure() for _ in range(5)]
    assert is_conservative(extended_potential, samples, X0)
    interaction = extend_functional(quadratic_interaction_energy(), X0)
    assert is_conservative(interaction, samples, X0)


@pytest.mark.parametrize(
    "make",
    [lambda: extend_functional(probability_potential_energy(shifted_quadratic, shifted_quadratic_grad), X0),
     lambda: extend_functional(quadratic_interaction_energy(), X0)],
)
def test_extension_gradient_matches_finite_difference(random_measure, rng, make):
    F = make()
    for _ in range(10):
        mu = random_measure()
        v = TangentVector(rng.normal(size=mu.points.shape), 0.5 + abs(float(rng.normal())))
        errors = []
        for dt in (1e-4, 5e-5):
            lhs, rhs = directional_derivative_check(F, mu, v, X0, dt)
            errors.append(abs(lhs - rhs))
        assert errors[1] <= 1e-2 * max(1.0, abs(rhs))
        assert 1.5 <= errors[0] / errors[1] <= 2.5


def test_is_conservative_examples(random_measure):
    samples = [random_measure() for _ in range(3)]
    assert not is_conservative(total_mass_functional(), samples, X0)
    assert is_conservative(scaled_moment_functional(X0), samples, X0)


def test_is_conservative_rejects_null_sample():
    with pytest.raises(MeasureError):
        is_conservative(total_mass_functional(), [null_measure(1)])


# ==================== FLUXO EM PARTÍCULAS ====================

def test_flow_stationary_for_zero_functional(random_measure):
    zero = potential_energy_functional(lambda X: np.zeros(len(np.atleast_2d(X))),
                                       lambda X: np.zeros_like(np.atleast_2d(X)))
    mu = random_measure()
    path = flow_particles(zero, mu, X0, dt=1e-2, steps=10)
    np.testing.assert_array_equal(path.measures[-1].points, mu.points)
    assert path.masses[-1] == pytest.approx(mu.mass, rel=1e-12)


def test_flow_mass_moment_exponential_decay(random_measure):
    mu = random_measure()
    path = flow_particles(mass_moment_functional(X0), mu, X0, dt=1e-3, steps=1000)
    assert path.masses[-1] == pytest.approx(mu.mass * np.exp(-1.0), rel=1e-2)
    np.testing.assert_allclose(path.measures[-1].points, mu.points, atol=1e-9)
    assert not path.halted


def test_flow_scaled_moment_contracts_atoms():
    path = flow_particles(scaled_moment_functional(0.0), dirac(1.0), 0.0, dt=1e-3, steps=1000)
    assert path.measures[-1].points[0, 0] == pytest.approx(np.exp(-1.0), rel=1e-2)
    np.testing.assert_allclose(path.masses, 1.0, atol=1e-12)
    assert np.all(np.diff(path.values) <= 1e-12)


def test_flow_extended_functional_conserves_mass(random_measure, extended_potential):
    mu = random_measure(n=4)
    path = flow_particles(extended_potential, mu, X0, dt=1e-3, steps=1000)
    assert np.max(np.abs(path.masses - mu.mass)) <= 1e-8


def test_flow_halts_when_mass_vanishes():
    path = flow_particles(total_mass_functional(), dirac(1.0, 0.05), 0.0, dt=0.01, steps=10)
    assert path.halted
    assert len(path.times) < 11
    assert np.all(path.masses > 0)


def test_flow_requires_positive_mass_and_dt(random_measure):
    with pytest.raises(MeasureError):
        flow_particles(total_mass_functional(), null_measure(1))
    with pytest.raises(ConfigError):
        flow_particles(total_mass_functional(), random_measure(), dt=0.0)


# ==================== FLUXO EM GRADE ====================

CELLS = 256
DX = 1.0 / CELLS
CENTERS = (np.arange(CELLS) + 0.5) * DX


def bump(mass=1.0):
    profile = np.exp(-((CENTERS - 0.5) ** 2) / (2 * 0.05 ** 2))
    return mass * profile / (profile.sum() * DX)


def test_uniform_density_is_stationary():
    rho0 = np.full(CELLS, 2.0)
    path = heat_flow_grid(rho0, 1e-5, 100, DX)
    np.testing.assert_allclose(path.densities[-1], rho0, rtol=0, atol=1e-14)


def test_heat_flow_conserves_mass():
    path = heat_flow_grid(bump(), 5e-6, 10_000, DX, record_every=1000)
    assert np.max(np.abs(path.masses - 1.0)) <= 1e-8


def test_heat_flow_unit_mass_matches_heat_equation():
    flow = heat_flow_grid(bump(), 5e-6, 500, DX)
    reference = heat_equation_grid(bump(), 5e-6, 500, DX)
    np.testing.assert_allclose(flow.densities, reference.densities, rtol=0, atol=1e-12)


def test_heat_flow_mass_two_is_time_rescaled():
    dt, steps = 2e-5, 2000
    flow = heat_flow_grid(bump(2.0), dt, steps, DX, record_every=500)
    reference = heat_equation_grid(bump(1.0), dt / 4, steps, DX, record_every=500)
    assert np.max(np.abs(flow.masses - 2.0)) <= 1e-8
    for rho, sigma in zip(flow.densities, reference.densities):
        assert np.sum(np.abs(rho - 2.0 * sigma)) * DX <= 1e-6


def test_heat_flow_entropy_decreases():
    path = heat_flow_grid(bump(), 5e-6, 1000, DX, record_every=100)
    assert np.all(np.diff(path.values) <= 1e-12)


def test_heat_flow_cfl_violation():
    with pytest.raises(ConfigError):
        heat_flow_grid(bump(), 1e-3, 10, DX)


def test_heat_flow_rejects_negative_density():
    rho0 = bump()
    rho0[0] = -1.0
    with pytest.raises(MeasureError):
        heat_flow_grid(rho0, 1e-6, 1, DX)


def test_extended_entropy_mass_shift():
    sigma = bump()
    assert extended_entropy_grid(2.0 * sigma, DX) == pytest.approx(extended_entropy_grid(sigma, DX) - np.log(2.0))
    with pytest.raises(MeasureError):
        extended_entropy_grid(np.zeros(4), DX)
