"""
Módulo de Geodésicas
Geodésicas WOP com a reparametrização de massa λ_t, caminhos com fonte
(velocidades + taxa de massa), ação dinâmica e teste de curvatura.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from utils.errors import ConfigError, MeasureError, PathConsistencyError
from utils.measures import (
    DiscreteMeasure,
    ReferenceLike,
    common_dim,
    new_measure,
    normalize,
    null_measure,
    resolve_reference,
    with_dim,
)
from utils.ot_core import Coupling, solve_w2_exact, solve_wp_exact
from utils.wop_metric import lifted_measure, wop_distance

logger = logging.getLogger(__name__)

PATH_TOL = 1e-6
DEFAULT_STEPS = 100


# ==================== TIPOS ====================

@dataclass(frozen=True, eq=False)
class GeodesicSample:
    """Amostra μ_t = m_t·μ̂_{λ_t} de uma geodésica."""
    t: float
    measure: DiscreteMeasure
    mass: float
    lam: float
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class SourcedPath:
    """
    Caminho discreto (μ_k, u_k, m'_k) em K+1 nós de tempo.

    As velocidades e taxas de massa vivem nos K intervalos [t_k, t_{k+1}]:
    `velocities[k]` tem forma (n, d) e move os átomos de μ_k para μ_{k+1}.
    Todos os nós têm o mesmo número de átomos, na mesma ordem.
    """
    times: np.ndarray
    measures: List[DiscreteMeasure]
    velocities: List[np.ndarray]
    mass_rates: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise MeasureError("Caminho precisa de pelo menos dois instantes.")
        if times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0):
            raise MeasureError("Instantes devem crescer estritamente de 0 a 1.")
        K = times.size - 1
        if len(self.measures) != K + 1 or len(self.velocities) != K or len(self.mass_rates) != K:
            raise MeasureError(
                f"Caminho com {K + 1} instantes exige {K + 1} medidas e {K} velocidades/taxas."
            )
        counts = {m.n_atoms for m in self.measures}
        if len(counts) != 1:
            raise MeasureError(f"Número de átomos varia ao longo do caminho: {sorted(counts)}")

    @property
    def steps(self) -> int:
        return len(self.velocities)


# ==================== REPARAMETRIZAÇÃO ====================

def lambda_reparam(t: float, m0: float, m1: float) -> float:
    """
    λ_t = t·m1 / ((1-t)m0 + t·m1).

    Raises:
        MeasureError: Denominador nulo
    """
    denom = (1.0 - t) * m0 + t * m1
    if denom == 0:
        raise MeasureError(f"λ_t indefinido: (1-t)m0 + t·m1 = 0 em t={t}")
    return t * m1 / denom


def _lambda(t: float, m0: float, m1: float) -> float:
    if m0 == 0:
        return 1.0
    if m1 == 0:
        return 0.0
    return lambda_reparam(t, m0, m1)


def _check_time(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ConfigError(f"t deve estar em [0, 1]; recebido {t}")
    return t


# ==================== GEODÉSICAS ====================

def geodesic_coupling(mu0: DiscreteMeasure, mu1: DiscreteMeasure, x0: ReferenceLike = None) -> Coupling:
    """Plano ótimo de W2 entre μ̄0 e μ̄1, compartilhado por todas as amostras de uma geodésica."""
    dim = common_dim(mu0, mu1, x0=x0)
    ref = resolve_reference(x0, dim)
    mu0, mu1 = with_dim(mu0, dim), with_dim(mu1, dim)
    _, coupling, _ = solve_w2_exact(normalize(mu0, ref), normalize(mu1, ref))
    return coupling


def _interpolate(coupling: Coupling, lam: float, mass: float, dim: int) -> DiscreteMeasure:
    rows, cols = coupling.support()
    X = coupling.source.points[rows]
    Y = coupling.target.points[cols]
    points = (1.0 - lam) * X + lam * Y
    return new_measure(points, mass * coupling.matrix[rows, cols], dim=dim)


def geodesic(mu0: DiscreteMeasure, mu1: DiscreteMeasure, t: float, x0: ReferenceLike = None,
             coupling: Optional[Coupling] = None) -> GeodesicSample:
    """
    Amostra da geodésica WOP em t: μ_t = m_t·μ̂_{λ_t}.

    μ̂ é a interpolação por deslocamento entre μ̄0 e μ̄1 construída a partir
    do plano ótimo (um átomo por entrada positiva do plano). Em t = 0 e t = 1
    as extremidades são devolvidas sem alteração.

    Args:
        mu0, mu1: Extremidades
        t: Instante em [0, 1]
        x0: Ponto de referência (não altera o resultado)
        coupling: Plano entre μ̄0 e μ̄1 já calculado (opcional)

    Returns:
        GeodesicSample
    """
    t = _check_time(t)
    dim = common_dim(mu0, mu1, x0=x0)
    mu0, mu1 = with_dim(mu0, dim), with_dim(mu1, dim)
    m0, m1 = mu0.mass, mu1.mass
    mass = (1.0 - t) * m0 + t * m1

    if m0 == 0 and m1 == 0:
        logger.warning("Geodésica entre duas medidas nulas: caminho nulo constante.")
        return GeodesicSample(t, null_measure(dim), 0.0, t, degenerate=True)

    lam = _lambda(t, m0, m1)
    if t == 0.0:
        return GeodesicSample(t, mu0, mass, lam)
    if t == 1.0:
        return GeodesicSample(t, mu1, mass, lam)

    coupling = coupling or geodesic_coupling(mu0, mu1, x0)
    return GeodesicSample(t, _interpolate(coupling, lam, mass, dim), mass, lam)


def geodesic_samples(mu0: DiscreteMeasure, mu1: DiscreteMeasure, times: Sequence[float],
                     x0: ReferenceLike = None) -> List[GeodesicSample]:
    """Amostras em vários instantes reutilizando um único plano."""
    dim = common_dim(mu0, mu1, x0=x0)
    mu0, mu1 = with_dim(mu0, dim), with_dim(mu1, dim)
    coupling = None
    if mu0.mass > 0 or mu1.mass > 0:
        coupling = geodesic_coupling(mu0, mu1, x0)
    return [geodesic(mu0, mu1, t, x0, coupling) for t in times]


def wop_p_geodesic(mu0: DiscreteMeasure, mu1: DiscreteMeasure, t: float,
                   x0: ReferenceLike = None, p: float = 2.0) -> GeodesicSample:
    """
    Geodésica de WOP_p: massa linear e interpolação por deslocamento das
    dilatadas T_{m}#μ̄ sob o plano ótimo de custo |x - y|^p, desfeita a
    dilatação no instante t. Para p ≠ 2 depende de x0.
    """
    if p < 1:
        raise ConfigError(f"Expoente p deve ser ≥ 1; recebido {p}")
    t = _check_time(t)
    dim = common_dim(mu0, mu1, x0=x0)
    mu0, mu1 = with_dim(mu0, dim), with_dim(mu1, dim)
    ref = resolve_reference(x0, dim)
    m0, m1 = mu0.mass, mu1.mass
    mass = (1.0 - t) * m0 + t * m1
    if mass == 0:
        degenerate = m0 == 0 and m1 == 0
        if degenerate:
            logger.warning("Geodésica WOP_p entre duas medidas nulas: caminho nulo constante.")
        return GeodesicSample(t, mu0 if t == 0 else mu1, 0.0, t, degenerate=degenerate)
    if t == 0.0:
        return GeodesicSample(t, mu0, mass, _lambda(t, m0, m1))
    if t == 1.0:
        return GeodesicSample(t, mu1, mass, _lambda(t, m0, m1))

    _, coupling, _ = solve_wp_exact(lifted_measure(mu0, ref), lifted_measure(mu1, ref), p)
    eta = _interpolate(coupling, t, 1.0, dim)
    points = (eta.points - ref) / mass + ref
    return GeodesicSample(t, new_measure(points, mass * eta.weights, dim=dim), mass, _lambda(t, m0, m1))


def export_frames(samples: Sequence[GeodesicSample]) -> List[Dict]:
    """Quadros {t, mass, points, weights} para exportação em JSON."""
    return [
        {
            "t": s.t,
            "mass": s.mass,
            "lambda": s.lam,
            "points": s.measure.points.tolist(),
            "weights": s.measure.weights.tolist(),
        }
        for s in samples
    ]


# ==================== CAMINHOS COM FONTE ====================

def path_from_nodes(times: Sequence[float], measures: Sequence[DiscreteMeasure]) -> SourcedPath:
    """
    Monta um SourcedPath a partir dos nós: velocidades por diferenças finitas
    das trajetórias atômicas e taxa de massa pela diferença das massas.
    """
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    velocities = [(measures[k + 1].points - measures[k].points) / dt[k] for k in range(len(dt))]
    masses = np.array([m.mass for m in measures])
    return SourcedPath(times, list(measures), velocities, np.diff(masses) / dt)


def geodesic_path(mu0: DiscreteMeasure, mu1: DiscreteMeasure, steps: int = DEFAULT_STEPS,
                  x0: ReferenceLike = None) -> SourcedPath:
    """
    Discretiza a geodésica em `steps` passos uniformes mantendo um átomo por
    entrada positiva do plano em todos os nós (inclusive nas extremidades).
    """
    if steps <= 0:
        raise ConfigError(f"Número de passos deve ser positivo; recebido {steps}")
    dim = common_dim(mu0, mu1, x0=x0)
    mu0, mu1 = with_dim(mu0, dim), with_dim(mu1, dim)
    times = np.linspace(0.0, 1.0, steps + 1)
    m0, m1 = mu0.mass, mu1.mass

    if m0 == 0 and m1 == 0:
        logger.warning("Caminho entre duas medidas nulas: caminho nulo constante.")
        nodes = [null_measure(dim) for _ in times]
        return SourcedPath(times, nodes, [np.zeros((0, dim))] * steps, np.zeros(steps), degenerate=True)

    coupling = geodesic_coupling(mu0, mu1, x0)
    nodes = [
        _interpolate(coupling, _lambda(t, m0, m1), (1.0 - t) * m0 + t * m1, dim)
        for t in times
    ]
    return path_from_nodes(times, nodes)


def _normalized_weights(path: SourcedPath) -> np.ndarray:
    for mu in path.measures:
        if mu.mass > 0:
            return mu.weights / mu.mass
    return np.zeros(path.measures[0].n_atoms)


def check_path_consistency(path: SourcedPath, tol: float = PATH_TOL) -> float:
    """
    Verifica a equação de continuidade com fonte passo a passo: átomos andam
    u_k·Δt, a massa varia m'_k·Δt e os pesos normalizados não mudam.

    Returns:
        float: maior violação encontrada

    Raises:
        PathConsistencyError: Violação acima de `tol`
    """
    dt = np.diff(path.times)
    w_bar = _normalized_weights(path)
    worst = 0.0
    for k in range(path.steps):
        a, b = path.measures[k], path.measures[k + 1]
        if a.n_atoms:
            drift = b.points - a.points - path.velocities[k] * dt[k]
            worst = max(worst, float(np.max(np.abs(drift))))
        worst = max(worst, abs(b.mass - a.mass - path.mass_rates[k] * dt[k]))
        for mu in (a, b):
            if mu.mass > 0:
                worst = max(worst, float(np.max(np.abs(mu.weights / mu.mass - w_bar))))
        if worst > tol:
            raise PathConsistencyError(
                f"Caminho inconsistente no intervalo {k} (t={path.times[k]:.4g}): violação {worst:.3e}"
            )
    return worst


def _integrand(points: np.ndarray, mass: float, u: np.ndarray, m_prime: float,
               w_bar: np.ndarray, ref: np.ndarray) -> float:
    flux = mass * u + m_prime * (points - ref)
    return m_prime ** 2 + float(np.dot(w_bar, np.sum(flux ** 2, axis=1)))


def dynamic_action(path: SourcedPath, x0: ReferenceLike = None, tol: float = PATH_TOL) -> float:
    """
    Ação ∫₀¹ [ |m'_t|² + Σ w̄_i |m_t u_t(x_i) + m'_t (x_i - x0)|² ] dt.

    Quadratura trapezoidal por intervalo: as pontas de cada intervalo usam
    a velocidade e a taxa de massa daquele intervalo.

    Raises:
        PathConsistencyError: O caminho não satisfaz a continuidade com fonte
    """
    check_path_consistency(path, tol)
    dim = common_dim(*path.measures, x0=x0)
    ref = resolve_reference(x0, dim)
    w_bar = _normalized_weights(path)
    dt = np.diff(path.times)
    action = 0.0
    for k in range(path.steps):
        a, b = path.measures[k], path.measures[k + 1]
        u, mp = path.velocities[k], path.mass_rates[k]
        left = _integrand(a.points, a.mass, u, mp, w_bar, ref)
        right = _integrand(b.points, b.mass, u, mp, w_bar, ref)
        action += 0.5 * dt[k] * (left + right)
    return float(action)


# ==================== CURVATURA ====================

def curvature_gap(mu0: DiscreteMeasure, mu1: DiscreteMeasure, eta: DiscreteMeasure, t: float,
                  x0: ReferenceLike = None) -> float:
    """
    WOP²(μ_t, η) - [(1-t)WOP²(μ0, η) + t·WOP²(μ1, η) - t(1-t)WOP²(μ0, μ1)];
    não-negativo (curvatura positiva no sentido de Alexandrov).
    """
    t = _check_time(t)
    mu_t = geodesic(mu0, mu1, t, x0).measure

    def sq(a, b):
        return wop_distance(a, b, x0).distance ** 2

    return sq(mu_t, eta) - ((1 - t) * sq(mu0, eta) + t * sq(mu1, eta) - t * (1 - t) * sq(mu0, mu1))
