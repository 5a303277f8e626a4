"""
Módulo do Espaço Tangente
Produto interno WOP, gradiente a partir da primeira variação, teste de
funcionais conservativos, extensão de funcionais de probabilidades e
integradores de fluxo gradiente (partículas e grade 1-d).
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Union

import numpy as np
from scipy.special import xlogy

from utils.errors import ConfigError, MeasureError, SolverError
from utils.measures import (
    DiscreteMeasure,
    ReferenceLike,
    common_dim,
    moment2,
    new_measure,
    normalize,
    pushforward_dilation,
    resolve_reference,
)

logger = logging.getLogger(__name__)

PointFunction = Callable[[DiscreteMeasure, np.ndarray], np.ndarray]


# ==================== TIPOS ====================

@dataclass(frozen=True, eq=False)
class TangentVector:
    """Vetor tangente (u, m'): velocidade por átomo da medida base e taxa de massa."""
    u: np.ndarray
    m_prime: float

    @classmethod
    def zero(cls, mu: DiscreteMeasure) -> "TangentVector":
        return cls(np.zeros_like(mu.points), 0.0)


@dataclass(frozen=True, eq=False)
class FirstVariationOracle:
    """
    Primeira variação δF/δμ e seu gradiente espacial.

    `value_at(μ, X)` devolve δF/δμ(μ) nos pontos X (k, d) com forma (k,);
    `grad_at(μ, X)` devolve ∇δF/δμ(μ) com forma (k, d). `linear_growth`
    é declarado pelo chamador (|∇δF/δμ(x)| ≲ 1 + |x|) e não é verificado.
    """
    value_at: PointFunction
    grad_at: PointFunction
    linear_growth: bool = False


@dataclass(frozen=True, eq=False)
class Functional:
    name: str
    evaluate: Callable[[DiscreteMeasure], float]
    oracle: FirstVariationOracle


@dataclass(frozen=True, eq=False)
class FlowPath:
    """Trajetória de um fluxo gradiente em partículas."""
    times: np.ndarray
    measures: List[DiscreteMeasure]
    masses: np.ndarray
    values: np.ndarray
    halted: bool = False


@dataclass(frozen=True, eq=False)
class GridPath:
    """Trajetória de um fluxo em grade 1-d (densidades por célula)."""
    times: np.ndarray
    densities: np.ndarray
    masses: np.ndarray
    values: np.ndarray
    dx: float
    steps: int = 0


OracleLike = Union[Functional, FirstVariationOracle]


def _oracle(F: OracleLike) -> FirstVariationOracle:
    return F.oracle if isinstance(F, Functional) else F


def _require_mass(mu: DiscreteMeasure, what: str) -> float:
    if mu.mass <= 0:
        raise MeasureError(f"{what} exige medida base com massa positiva.")
    return mu.mass


# ==================== PRODUTO INTERNO E GRADIENTE ====================

def inner_product(v1: TangentVector, v2: TangentVector, mu: DiscreteMeasure,
                  x0: ReferenceLike = None) -> float:
    """
    ⟨v1, v2⟩_μ = m'_1 m'_2 + Σ w̄_i ⟨m u_1(x_i) + m'_1(x_i - x0), m u_2(x_i) + m'_2(x_i - x0)⟩.

    Raises:
        MeasureError: Medida base nula ou vetores com número de átomos errado
    """
    m = _require_mass(mu, "O produto interno")
    for v in (v1, v2):
        if np.shape(v.u) != mu.points.shape:
            raise MeasureError(f"Velocidade com forma {np.shape(v.u)}, esperado {mu.points.shape}.")
    ref = resolve_reference(x0, common_dim(mu, x0=x0))
    w_bar = mu.weights / m
    offset = mu.points - ref
    a = m * v1.u + v1.m_prime * offset
    b = m * v2.u + v2.m_prime * offset
    return float(v1.m_prime * v2.m_prime + np.dot(w_bar, np.sum(a * b, axis=1)))


def wop_gradient(F: OracleLike, mu: DiscreteMeasure, x0: ReferenceLike = None) -> TangentVector:
    """
    Gradiente WOP a partir da primeira variação:
    m'_F = Σ w̄ δF/δμ(x_i) - Σ w̄ ⟨∇δF/δμ(x_i), x_i - x0⟩,
    u_F(x_i) = [∇δF/δμ(x_i) - m'_F (x_i - x0)] / m_μ.

    Raises:
        MeasureError: Medida nula
        ConfigError: Oráculo sem a declaração de crescimento linear
    """
    oracle = _oracle(F)
    if not oracle.linear_growth:
        raise ConfigError("Oráculo sem certificado de crescimento linear do gradiente.")
    m = _require_mass(mu, "O gradiente WOP")
    ref = resolve_reference(x0, common_dim(mu, x0=x0))
    w_bar = mu.weights / m
    values = np.asarray(oracle.value_at(mu, mu.points), dtype=float).reshape(-1)
    grads = np.asarray(oracle.grad_at(mu, mu.points), dtype=float).reshape(mu.points.shape)
    offset = mu.points - ref
    m_prime = float(np.dot(w_bar, values) - np.dot(w_bar, np.sum(grads * offset, axis=1)))
    return TangentVector((grads - m_prime * offset) / m, m_prime)


def perturb(mu: DiscreteMeasure, v: TangentVector, dt: float) -> DiscreteMeasure:
    """Curva de primeira ordem: átomos x + dt·u(x), massa m + dt·m' (reescala uniforme)."""
    m = _require_mass(mu, "A perturbação")
    new_mass = m + dt * v.m_prime
    if new_mass < 0:
        raise MeasureError(f"Massa negativa após perturbação: {new_mass}")
    return new_measure(mu.points + dt * v.u, mu.weights * (new_mass / m), dim=mu.dim)


def directional_derivative_check(F: Functional, mu: DiscreteMeasure, v: TangentVector,
                                 x0: ReferenceLike = None, dt: float = 1e-4):
    """
    Compara a derivada direcional por diferença finita com ⟨∇F, v⟩_μ.

    Returns:
        (lhs, rhs): lhs = [F(μ_dt) - F(μ)]/dt, rhs = inner_product(∇F, v); |lhs - rhs| = O(dt)
    """
    if dt <= 0:
        raise ConfigError(f"dt deve ser positivo; recebido {dt}")
    grad = wop_gradient(F, mu, x0)
    lhs = (F.evaluate(perturb(mu, v, dt)) - F.evaluate(mu)) / dt
    rhs = inner_product(grad, v, mu, x0)
    return float(lhs), float(rhs)


def check_oracle_consistency(oracle: FirstVariationOracle, mu: DiscreteMeasure,
                             points: np.ndarray, step: float = 1e-5) -> float:
    """Maior erro relativo entre grad_at e diferenças centrais de value_at."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    grads = np.asarray(oracle.grad_at(mu, points), dtype=float).reshape(points.shape)
    fd = np.zeros_like(points)
    for k in range(points.shape[1]):
        e = np.zeros(points.shape[1])
        e[k] = step
        fd[:, k] = (np.asarray(oracle.value_at(mu, points + e)) -
                    np.asarray(oracle.value_at(mu, points - e))) / (2 * step)
    scale = np.maximum(np.abs(grads), 1.0)
    return float(np.max(np.abs(fd - grads) / scale))


# ==================== FUNCIONAIS DE FORMA FECHADA ====================

def total_mass_functional() -> Functional:
    """F(μ) = m_μ."""
    return Functional(
        "mass",
        lambda mu: mu.mass,
        FirstVariationOracle(
            lambda mu, X: np.ones(len(X)),
            lambda mu, X: np.zeros_like(np.atleast_2d(X)),
            linear_growth=True,
        ),
    )


def _sq_offset(X: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return np.sum((np.atleast_2d(X) - ref) ** 2, axis=1)


def mass_moment_functional(x0: ReferenceLike = None) -> Functional:
    """F(μ) = m_μ²(1 + M_{x0}(μ̄))/2 = (m² + m·M_{x0}(μ))/2."""

    def evaluate(mu):
        return 0.5 * (mu.mass ** 2 + mu.mass * moment2(mu, x0))

    def value_at(mu, X):
        ref = resolve_reference(x0, common_dim(mu, x0=x0))
        return mu.mass + 0.5 * moment2(mu, ref) + 0.5 * mu.mass * _sq_offset(X, ref)

    def grad_at(mu, X):
        ref = resolve_reference(x0, common_dim(mu, x0=x0))
        return mu.mass * (np.atleast_2d(X) - ref)

    return Functional("mass-moment", evaluate, FirstVariationOracle(value_at, grad_at, True))


def scaled_moment_functional(x0: ReferenceLike = None) -> Functional:
    """F(μ) = m_μ² M_{x0}(μ̄)/2 = m·M_{x0}(μ)/2."""

    def evaluate(mu):
        return 0.5 * mu.mass * moment2(mu, x0)

    def value_at(mu, X):
        ref = resolve_reference(x0, common_dim(mu, x0=x0))
        return 0.5 * moment2(mu, ref) + 0.5 * mu.mass * _sq_offset(X, ref)

    def grad_at(mu, X):
        ref = resolve_reference(x0, common_dim(mu, x0=x0))
        return mu.mass * (np.atleast_2d(X) - ref)

    return Functional("scaled-moment", evaluate, FirstVariationOracle(value_at, grad_at, True))


def normalized_moment_functional(x0: ReferenceLike = None) -> Functional:
    """F(μ) = M_{x0}(μ̄)/2; definido para m_μ > 0."""

    def evaluate(mu):
        return 0.5 * moment2(mu, x0) / _require_mass(mu, "M(μ̄)/2")

    def value_at(mu, X):
        m = _require_mass(mu, "M(μ̄)/2")
        ref = resolve_reference(x0, common_dim(mu, x0=x0))
        return _sq_offset(X, ref) / (2 * m) - moment2(mu, ref) / (2 * m * m)

    def grad_at(mu, X):
        m = _require_mass(mu, "M(μ̄)/2")
        ref = resolve_reference(x0, common_dim(mu, x0=x0))
        return (np.atleast_2d(X) - ref) / m

    return Functional("normalized-moment", evaluate, FirstVariationOracle(value_at, grad_at, True))


def potential_energy_functional(V: Callable[[np.ndarray], np.ndarray],
                                grad_V: Callable[[np.ndarray], np.ndarray],
                                linear_growth: bool = True, name: str = "potential") -> Functional:
    """F(μ) = Σ w_i V(x_i); δF/δμ = V."""
    return Functional(
        name,
        lambda mu: float(np.dot(mu.weights, V(mu.points))) if mu.n_atoms else 0.0,
        FirstVariationOracle(
            lambda mu, X: np.asarray(V(np.atleast_2d(X)), dtype=float),
            lambda mu, X: np.asarray(grad_V(np.atleast_2d(X)), dtype=float),
            linear_growth,
        ),
    )


# ==================== FUNCIONAIS EM PROBABILIDADES ====================

def probability_potential_energy(V, grad_V) -> Functional:
    """Energia potencial ∫V dσ vista como funcional em probabilidades."""
    return potential_energy_functional(V, grad_V, name="potential-probability")


def quadratic_interaction_energy() -> Functional:
    """F(σ) = ½ ΣΣ w_i w_j |x_i - x_j|²/2; δF/δσ(x) = Σ_j w_j |x - x_j|²/2."""

    def evaluate(sigma):
        if sigma.n_atoms == 0:
            return 0.0
        diff = sigma.points[:, None, :] - sigma.points[None, :, :]
        sq = np.sum(diff ** 2, axis=2)
        return float(0.25 * sigma.weights @ sq @ sigma.weights)

    def value_at(sigma, X):
        diff = np.atleast_2d(X)[:, None, :] - sigma.points[None, :, :]
        return 0.5 * np.sum(diff ** 2, axis=2) @ sigma.weights

    def grad_at(sigma, X):
        X = np.atleast_2d(X)
        return sigma.mass * X - sigma.weights @ sigma.points

    return Functional("interaction", evaluate, FirstVariationOracle(value_at, grad_at, True))


def extend_functional(F: Functional, x0: ReferenceLike = None) -> Functional:
    """
    Extensão F̃(μ) = F(T_{m_μ}#μ̄) de um funcional em probabilidades.

    Com σ = T_m#μ̄ e g = δF/δσ:
    δF̃/δμ(y) = g(T_m y)/m - (1/m)∫g dσ + ∫⟨∇g(T_m x), x - x0⟩ dμ̄(x),
    ∇δF̃/δμ(y) = ∇g(T_m y). O gradiente WOP resultante tem m' = 0.
    """
    inner = F.oracle

    def lift(mu):
        return pushforward_dilation(normalize(mu, x0), mu.mass, x0)

    def dilate(mu, X):
        ref = resolve_reference(x0, common_dim(mu, x0=x0))
        return mu.mass * (np.atleast_2d(X) - ref) + ref, ref

    def evaluate(mu):
        return F.evaluate(lift(mu))

    def value_at(mu, X):
        m = _require_mass(mu, "A extensão")
        sigma = lift(mu)
        Y, ref = dilate(mu, X)
        mu_bar = normalize(mu, ref)
        g_sigma = np.asarray(inner.value_at(sigma, sigma.points), dtype=float)
        grad_support = np.asarray(inner.grad_at(sigma, sigma.points), dtype=float)
        offset = mu_bar.points - ref
        const = -np.dot(sigma.weights, g_sigma) / m \
            + np.dot(mu_bar.weights, np.sum(grad_support * offset, axis=1))
        return np.asarray(inner.value_at(sigma, Y), dtype=float) / m + const

    def grad_at(mu, X):
        sigma = lift(mu)
        Y, _ = dilate(mu, X)
        return np.asarray(inner.grad_at(sigma, Y), dtype=float)

    return Functional(f"extended-{F.name}", evaluate,
                      FirstVariationOracle(value_at, grad_at, inner.linear_growth))


def is_conservative(F: OracleLike, samples: Sequence[DiscreteMeasure], x0: ReferenceLike = None,
                    tol: float = 1e-8) -> bool:
    """
    Verificação amostral de m'_F(μ) = 0 nas medidas dadas.

    Raises:
        MeasureError: Alguma amostra é nula
    """
    for mu in samples:
        if mu.is_null:
            raise MeasureError("Amostra nula no teste de conservação.")
        if abs(wop_gradient(F, mu, x0).m_prime) > tol:
            return False
    return True


# ==================== FLUXO EM PARTÍCULAS ====================

def flow_particles(F: Functional, mu0: DiscreteMeasure, x0: ReferenceLike = None,
                   dt: float = 1e-3, steps: int = 100) -> FlowPath:
    """
    Euler explícito do fluxo gradiente WOP:
    x_i ← x_i - dt·u_F(x_i), m ← m - dt·m'_F (pesos reescalados uniformemente).

    Se a massa chegar a zero ou abaixo, o fluxo para e devolve o caminho
    parcial com `halted=True`.

    Raises:
        MeasureError: Massa inicial nula
        ConfigError: dt ≤ 0 ou steps < 0
        SolverError: Falha ao avaliar o gradiente
    """
    _require_mass(mu0, "O fluxo gradiente")
    if dt <= 0:
        raise ConfigError(f"dt deve ser positivo; recebido {dt}")
    if steps < 0:
        raise ConfigError(f"Número de passos inválido: {steps}")

    w_bar = mu0.weights / mu0.mass
    mu = mu0
    times, measures, masses, values = [0.0], [mu0], [mu0.mass], [F.evaluate(mu0)]
    halted = False
    for k in range(steps):
        try:
            grad = wop_gradient(F, mu, x0)
        except (ConfigError, MeasureError):
            raise
        except Exception as e:
            raise SolverError(f"Falha ao avaliar o gradiente no passo {k}: {e}", iterations=k) from e
        if not (np.all(np.isfinite(grad.u)) and np.isfinite(grad.m_prime)):
            raise SolverError(f"Gradiente não finito no passo {k}", iterations=k)

        mass = mu.mass - dt * grad.m_prime
        if mass <= 0:
            logger.warning("Fluxo interrompido no passo %d: massa %.3e ≤ 0", k, mass)
            halted = True
            break
        mu = new_measure(mu.points - dt * grad.u, w_bar * mass, dim=mu.dim)
        times.append((k + 1) * dt)
        measures.append(mu)
        masses.append(mass)
        values.append(F.evaluate(mu))
    logger.debug("Fluxo %s: %d passos, massa final %.6g", F.name, len(times) - 1, masses[-1])
    return FlowPath(np.array(times), measures, np.array(masses), np.array(values), halted)


# ==================== FLUXO EM GRADE 1-D ====================

def extended_entropy_grid(rho: np.ndarray, dx: float) -> float:
    """Entropia estendida Ẽ = Σ ρ̄ log ρ̄ dx - log m, com ρ̄ = ρ/m e 0·log 0 = 0."""
    rho = np.asarray(rho, dtype=float)
    m = float(rho.sum() * dx)
    if m <= 0:
        raise MeasureError("Entropia estendida indefinida para massa nula.")
    rho_bar = rho / m
    return float(np.sum(xlogy(rho_bar, rho_bar)) * dx - np.log(m))


def _laplacian_neumann(rho: np.ndarray, dx: float) -> np.ndarray:
    flux = np.zeros(rho.size + 1)
    flux[1:-1] = (rho[1:] - rho[:-1]) / dx
    return (flux[1:] - flux[:-1]) / dx


def _validate_grid(rho0, dt: float, steps: int, dx: float) -> np.ndarray:
    rho = np.array(rho0, dtype=float).reshape(-1)
    if dt <= 0 or dx <= 0:
        raise ConfigError(f"dt e dx devem ser positivos; recebido dt={dt}, dx={dx}")
    if steps < 0:
        raise ConfigError(f"Número de passos inválido: {steps}")
    if not np.all(np.isfinite(rho)) or np.any(rho < 0):
        raise MeasureError("Densidade inicial deve ser finita e não-negativa.")
    return rho


def heat_flow_grid(rho0, dt: float, steps: int, dx: float, record_every: int = 1) -> GridPath:
    """
    Fluxo da entropia estendida na grade: ∂_t ν = (1/m_ν²) Δν com fluxo nulo nas bordas.

    O coeficiente 1/m² é recalculado a cada passo a partir da massa atual.

    Args:
        rho0: Densidade inicial por célula (massa = Σρ·dx)
        dt: Passo de tempo
        steps: Número de passos
        dx: Largura da célula
        record_every: Intervalo de gravação dos quadros

    Raises:
        ConfigError: Violação da condição CFL dt/(m² dx²) ≤ 1/2
        SolverError: Densidade negativa além de -1e-12
    """
    rho = _validate_grid(rho0, dt, steps, dx)
    mass = float(rho.sum() * dx)
    if mass <= 0:
        raise MeasureError("Fluxo em grade exige massa positiva.")

    times, frames, masses, values = [0.0], [rho.copy()], [mass], [extended_entropy_grid(rho, dx)]
    for k in range(1, steps + 1):
        mass = float(rho.sum() * dx)
        coeff = 1.0 / mass ** 2
        if dt * coeff / dx ** 2 > 0.5:
            raise ConfigError(
                f"Condição CFL violada: dt·(1/m²)/dx² = {dt * coeff / dx ** 2:.4g} > 1/2"
            )
        rho = rho + dt * coeff * _laplacian_neumann(rho, dx)
        if rho.min() < -1e-12:
            raise SolverError(f"Densidade negativa no passo {k}: {rho.min():.3e}", iterations=k)
        if k % record_every == 0 or k == steps:
            times.append(k * dt)
            frames.append(rho.copy())
            masses.append(float(rho.sum() * dx))
            values.append(extended_entropy_grid(np.maximum(rho, 0.0), dx))
    logger.debug("Fluxo em grade: %d passos, massa %.15g → %.15g", steps, masses[0], masses[-1])
    return GridPath(np.array(times), np.array(frames), np.array(masses), np.array(values), dx, steps)


def heat_equation_grid(sigma0, dt: float, steps: int, dx: float, diffusivity: float = 1.0,
                       record_every: int = 1) -> GridPath:
    """Equação do calor padrão ∂_t σ = κΔσ com o mesmo estêncil (solver de referência)."""
    rho = _validate_grid(sigma0, dt, steps, dx)
    if dt * diffusivity / dx ** 2 > 0.5:
        raise ConfigError(f"Condição CFL violada: κ·dt/dx² = {dt * diffusivity / dx ** 2:.4g} > 1/2")
    times, frames, masses = [0.0], [rho.copy()], [float(rho.sum() * dx)]
    for k in range(1, steps + 1):
        rho = rho + dt * diffusivity * _laplacian_neumann(rho, dx)
        if k % record_every == 0 or k == steps:
            times.append(k * dt)
            frames.append(rho.copy())
            masses.append(float(rho.sum() * dx))
    return GridPath(np.array(times), np.array(frames), np.array(masses),
                    np.full(len(times), np.nan), dx, steps)
