"""
Módulo de Baricentros
Baricentros WOP de misturas finitas Σλ_i δ_{μ_i}, reduzidos a um baricentro
de Wasserstein das medidas normalizadas com pesos ∝ λ_i m_i.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ConfigError, MeasureError
from utils.measures import (
    DiscreteMeasure,
    ReferenceLike,
    common_dim,
    merge_atoms,
    new_measure,
    normalize,
    null_measure,
    prune,
    resolve_reference,
    with_dim,
)
from utils.ot_core import solve_w2_exact
from utils.wop_metric import wop_distance

logger = logging.getLogger(__name__)

MAX_ITER = 500
MOVEMENT_TOL = 1e-8
WEIGHT_TOL = 1e-12


# ==================== TIPOS ====================

@dataclass(frozen=True, eq=False)
class BarycenterProblem:
    """Mistura finita P = Σ λ_i δ_{μ_i} com ponto de referência x0."""
    entries: Tuple[Tuple[float, DiscreteMeasure], ...]
    x0: np.ndarray

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([lam for lam, _ in self.entries])

    @property
    def measures(self) -> List[DiscreteMeasure]:
        return [mu for _, mu in self.entries]


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    measure: DiscreteMeasure
    iterations: int
    converged: bool
    degenerate: bool = False
    movement: float = 0.0


def barycenter_problem(entries: Sequence[Tuple[float, DiscreteMeasure]],
                       x0: ReferenceLike = None) -> BarycenterProblem:
    """
    Valida e monta um BarycenterProblem.

    Raises:
        ConfigError: Lista vazia, λ_i ≤ 0 ou Σλ_i ≠ 1
        MeasureError: Dimensões incompatíveis
    """
    if not entries:
        raise ConfigError("Baricentro exige pelo menos uma medida.")
    lambdas = np.array([float(lam) for lam, _ in entries])
    if np.any(lambdas <= 0):
        raise ConfigError(f"Pesos λ_i devem ser positivos: {lambdas.tolist()}")
    if abs(lambdas.sum() - 1.0) > WEIGHT_TOL:
        raise ConfigError(f"Pesos λ_i devem somar 1; soma = {lambdas.sum()!r}")
    measures = [mu for _, mu in entries]
    dim = common_dim(*measures, x0=x0)
    ref = resolve_reference(x0, dim)
    fixed = tuple((float(lam), with_dim(mu, dim)) for lam, mu in entries)
    return BarycenterProblem(fixed, ref)


def variance(mu: DiscreteMeasure, problem: BarycenterProblem) -> float:
    """V(μ) = Σ λ_i WOP²_{x0}(μ, μ_i)."""
    return float(sum(lam * wop_distance(mu, mu_i, problem.x0).distance ** 2
                     for lam, mu_i in problem.entries))


# ==================== W2 ====================

def quantile_barycenter_1d(weights: Sequence[float], measures: Sequence[DiscreteMeasure]) -> DiscreteMeasure:
    """
    Baricentro W2 exato em 1-d pela média ponderada das funções quantil.

    Os níveis de quantil são a união dos pesos acumulados das entradas;
    cada intervalo de níveis vira um átomo.
    """
    weights = np.asarray(weights, dtype=float)
    sorted_inputs = []
    levels = [np.array([1.0])]
    for mu in measures:
        mu = prune(mu)
        order = np.argsort(mu.points[:, 0], kind="stable")
        x = mu.points[order, 0]
        cum = np.cumsum(mu.weights[order]) / mu.mass
        cum[-1] = 1.0
        sorted_inputs.append((x, cum))
        levels.append(cum)

    breaks = np.unique(np.concatenate(levels))
    breaks = breaks[(breaks > 0) & (breaks <= 1.0)]
    lower = np.concatenate([[0.0], breaks[:-1]])
    masses = breaks - lower
    keep = masses > 1e-15
    lower, breaks, masses = lower[keep], breaks[keep], masses[keep]
    mids = 0.5 * (lower + breaks)

    points = np.zeros(mids.size)
    for w, (x, cum) in zip(weights, sorted_inputs):
        idx = np.minimum(np.searchsorted(cum, mids, side="left"), x.size - 1)
        points += w * x[idx]
    return merge_atoms(new_measure(points.reshape(-1, 1), masses / masses.sum(), dim=1))


def _initial_support(weights: np.ndarray, measures: Sequence[DiscreteMeasure],
                     support_size: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    template = max(measures, key=lambda mu: mu.n_atoms)
    X, a = template.points.copy(), template.weights.copy()
    if support_size is not None and 0 < support_size < X.shape[0]:
        heaviest = np.argsort(-a, kind="stable")[:support_size]
        X, a = X[heaviest], a[heaviest]
    a = a / a.sum()
    target_mean = sum(w * (mu.weights @ mu.points) / mu.mass for w, mu in zip(weights, measures))
    X = X - a @ X + target_mean
    return X, a


def w2_barycenter(weights: Sequence[float], probability_measures: Sequence[DiscreteMeasure],
                  support_size: Optional[int] = None, max_iter: int = MAX_ITER,
                  tol: float = MOVEMENT_TOL, quantile_fast_path: bool = True) -> BarycenterResult:
    """
    Baricentro W2 de suporte livre por ponto fixo.

    Alterna planos exatos para cada entrada e a projeção baricêntrica
    x_k ← Σ_i w_i (média dos destinos de x_k sob π_i). Para quando o maior
    deslocamento fica abaixo de `tol` ou após `max_iter` iterações; neste
    caso devolve o melhor iterado com `converged=False`. Entradas 1-d usam
    a média de quantis (exata), salvo com `quantile_fast_path=False`.

    Args:
        weights: Pesos positivos somando 1
        probability_measures: Medidas de probabilidade
        support_size: Tamanho do suporte do baricentro (padrão: maior entrada)
        quantile_fast_path: Em 1-d, usa a média de quantis em vez do ponto fixo

    Returns:
        BarycenterResult
    """
    weights = np.asarray(weights, dtype=float)
    if weights.size != len(probability_measures) or weights.size == 0:
        raise ConfigError("Número de pesos difere do número de medidas.")
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ConfigError(f"Pesos devem ser positivos e somar 1: {weights.tolist()}")
    dim = common_dim(*probability_measures)
    measures = [prune(with_dim(mu, dim)) for mu in probability_measures]
    if any(mu.n_atoms == 0 for mu in measures):
        raise MeasureError("Baricentro W2 exige medidas de probabilidade não nulas.")

    if len(measures) == 1:
        return BarycenterResult(measures[0], 0, True)
    if dim == 1 and quantile_fast_path:
        return BarycenterResult(quantile_barycenter_1d(weights, measures), 1, True)

    X, a = _initial_support(weights, measures, support_size)
    best_X, best_cost = X, np.inf
    movement = np.inf
    for iteration in range(1, max_iter + 1):
        bary = new_measure(X, a, dim=dim)
        X_new = np.zeros_like(X)
        cost = 0.0
        for w, mu in zip(weights, measures):
            c, coupling, _ = solve_w2_exact(bary, mu)
            cost += w * c
            X_new += w * (coupling.matrix @ mu.points) / a[:, None]
        if cost < best_cost:
            best_X, best_cost = X, cost
        movement = float(np.max(np.linalg.norm(X_new - X, axis=1)))
        X = X_new
        logger.debug("Baricentro W2: iteração %d, custo %.12g, deslocamento %.3e", iteration, cost, movement)
        if movement < tol:
            return BarycenterResult(merge_atoms(new_measure(X, a, dim=dim)), iteration, True, movement=movement)

    logger.warning("Baricentro W2 não convergiu em %d iterações (deslocamento %.3e); usando melhor iterado.",
                   max_iter, movement)
    return BarycenterResult(merge_atoms(new_measure(best_X, a, dim=dim)), max_iter, False, movement=movement)


# ==================== WOP ====================

def wop_barycenter(problem: BarycenterProblem, support_size: Optional[int] = None,
                   quantile_fast_path: bool = True) -> BarycenterResult:
    """
    Baricentro WOP: massa Σλ_i m_i e forma normalizada igual ao baricentro W2
    das μ̄_i com pesos ∝ λ_i m_i. Não depende de x0.

    Se todas as entradas forem nulas devolve a medida nula com `degenerate=True`.
    """
    masses = np.array([mu.mass for mu in problem.measures])
    total = float(np.dot(problem.lambdas, masses))
    dim = common_dim(*problem.measures, x0=problem.x0)
    if total == 0:
        logger.warning("Baricentro de medidas todas nulas: resultado nulo.")
        return BarycenterResult(null_measure(dim), 0, True, degenerate=True)

    active = masses > 0
    weights = problem.lambdas[active] * masses[active] / total
    normalized = [normalize(mu) for mu, on in zip(problem.measures, active) if on]
    result = w2_barycenter(weights / weights.sum(), normalized, support_size,
                           quantile_fast_path=quantile_fast_path)
    bary = result.measure
    measure = new_measure(bary.points, bary.weights * total, dim=dim)
    return BarycenterResult(measure, result.iterations, result.converged, movement=result.movement)
