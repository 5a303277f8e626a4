"""
Módulo de Transporte Ótimo Balanceado
Solvers de W2 (e W_p) entre medidas de mesma massa: LP exato via POT
(network simplex) e Sinkhorn entrópico em domínio log, com potenciais duais.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import ot
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from utils.errors import MeasureError, SolverError
from utils.measures import DiscreteMeasure, common_dim, with_dim

logger = logging.getLogger(__name__)

EXACT_MAX_ITER = 10_000_000
EXACT_MAX_ATOMS = 2000
SINKHORN_MAX_ITER = 100_000
SINKHORN_STAGE_MAX_ITER = 10_000
SINKHORN_TOL = 1e-9
# resíduo aceito quando o orçamento de iterações acaba; o arredondamento fecha as marginais
SINKHORN_ACCEPT_TOL = 1e-6
MASS_RTOL = 1e-9


# ==================== TIPOS ====================

@dataclass(frozen=True, eq=False)
class Coupling:
    """
    Plano de transporte π (n×m) entre `source` e `target`.

    Linhas/colunas seguem a ordem dos átomos das medidas de origem, incluindo
    átomos de peso zero (com linhas/colunas nulas).
    """
    matrix: np.ndarray
    source: DiscreteMeasure
    target: DiscreteMeasure

    def marginal_error(self) -> float:
        rows = np.abs(self.matrix.sum(axis=1) - self.source.weights)
        cols = np.abs(self.matrix.sum(axis=0) - self.target.weights)
        return float(max(rows.max(initial=0.0), cols.max(initial=0.0)))

    def support(self) -> Tuple[np.ndarray, np.ndarray]:
        """Índices (i, j) com π_ij > 0."""
        return np.nonzero(self.matrix > 0)


@dataclass(frozen=True, eq=False)
class DualPotentials:
    """Potenciais de Kantorovich φ (origem) e ψ (destino)."""
    phi: np.ndarray
    psi: np.ndarray

    def value(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(self.phi, a) + np.dot(self.psi, b))


# ==================== CUSTOS ====================

def cost_matrix(X: np.ndarray, Y: np.ndarray, p: float = 2.0) -> np.ndarray:
    """Matriz |x_i - y_j|^p. Para p = 2 usa a distância euclidiana ao quadrado direta."""
    if p == 2:
        return cdist(X, Y, metric="sqeuclidean")
    return cdist(X, Y, metric="euclidean") ** p


def squared_distance(x: np.ndarray, y: np.ndarray) -> float:
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.dot(diff, diff))


def coupling_cost(pi: Coupling, cost_fn: Callable[[np.ndarray, np.ndarray], float] = squared_distance) -> float:
    """
    Custo Σ π_ij c(x_i, y_j), avaliado apenas no suporte do plano.

    Args:
        pi: Plano de transporte
        cost_fn: Custo ponto a ponto c(x, y) (padrão: distância ao quadrado)

    Returns:
        float: custo total
    """
    rows, cols = pi.support()
    total = 0.0
    for i, j in zip(rows, cols):
        total += pi.matrix[i, j] * cost_fn(pi.source.points[i], pi.target.points[j])
    return float(total)


def feasibility_gap(potentials: DualPotentials, C: np.ndarray) -> float:
    """max_ij (φ_i + ψ_j - c_ij); ≤ 0 para potenciais viáveis."""
    if C.size == 0:
        return 0.0
    return float(np.max(potentials.phi[:, None] + potentials.psi[None, :] - C))


def complementary_slackness_gap(pi: Coupling, potentials: DualPotentials, C: np.ndarray) -> float:
    """max sobre π_ij > 0 de |c_ij - φ_i - ψ_j|; zero para par primal-dual ótimo."""
    rows, cols = pi.support()
    if rows.size == 0:
        return 0.0
    slack = C[rows, cols] - potentials.phi[rows] - potentials.psi[cols]
    return float(np.max(np.abs(slack)))


# ==================== PREPARAÇÃO ====================

def _prepare(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    dim = common_dim(mu, nu)
    mu, nu = with_dim(mu, dim), with_dim(nu, dim)
    if mu.n_atoms == 0 or nu.n_atoms == 0 or mu.mass <= 0 or nu.mass <= 0:
        raise MeasureError("Transporte balanceado exige suportes não vazios com massa positiva.")
    if abs(mu.mass - nu.mass) > MASS_RTOL * max(mu.mass, nu.mass):
        raise MeasureError(f"Massas diferentes: {mu.mass!r} vs {nu.mass!r}")
    return mu, nu


def _c_transform_fill(C: np.ndarray, rows: np.ndarray, cols: np.ndarray,
                      phi_active: np.ndarray, psi_active: np.ndarray) -> DualPotentials:
    """
    Estende potenciais calculados nos átomos ativos aos átomos de peso zero
    pela c-transformada, mantendo a viabilidade em todos os pares.
    """
    n, m = C.shape
    phi = np.full(n, np.nan)
    psi = np.full(m, np.nan)
    phi[rows] = phi_active
    psi[cols] = psi_active

    idle_cols = np.setdiff1d(np.arange(m), cols)
    if idle_cols.size:
        psi[idle_cols] = np.min(C[np.ix_(rows, idle_cols)] - phi_active[:, None], axis=0)
    idle_rows = np.setdiff1d(np.arange(n), rows)
    if idle_rows.size:
        phi[idle_rows] = np.min(C[idle_rows, :] - psi[None, :], axis=1)
    return DualPotentials(phi, psi)


# ==================== SOLVER EXATO ====================

def _check_exact_size(n_rows: int, n_cols: int, max_atoms: Optional[int]) -> None:
    limit = EXACT_MAX_ATOMS if max_atoms is None else max_atoms
    if max(n_rows, n_cols) > limit:
        raise SolverError(
            f"Instância grande demais para o LP exato ({n_rows}x{n_cols} átomos, limite {limit}); "
            "use o modo entrópico (eps > 0)."
        )


def solve_wp_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0,
                   max_atoms: Optional[int] = None) -> Tuple[float, Coupling, DualPotentials]:
    """
    Transporte ótimo exato com custo |x - y|^p (network simplex do POT).

    Args:
        mu: Medida de origem
        nu: Medida de destino, com a mesma massa de `mu`
        p: Expoente do custo
        max_atoms: Máximo de átomos ativos por lado (padrão: EXACT_MAX_ATOMS)

    Returns:
        (custo, plano, potenciais duais)

    Raises:
        MeasureError: Suporte vazio ou massas diferentes
        SolverError: Instância acima do limite ou simplex sem atingir o ótimo
    """
    mu, nu = _prepare(mu, nu)
    rows = np.flatnonzero(mu.weights > 0)
    cols = np.flatnonzero(nu.weights > 0)
    _check_exact_size(len(rows), len(cols), max_atoms)
    C = cost_matrix(mu.points, nu.points, p)

    a = mu.weights[rows]
    b = nu.weights[cols]
    b = b * (a.sum() / b.sum())
    C_active = np.ascontiguousarray(C[np.ix_(rows, cols)])

    G, log = ot.emd(a, b, C_active, numItermax=EXACT_MAX_ITER, log=True)
    if log.get("result_code", 1) != 1:
        raise SolverError(f"Network simplex não convergiu: {log.get('warning')}",
                          iterations=EXACT_MAX_ITER)

    matrix = np.zeros(C.shape)
    matrix[np.ix_(rows, cols)] = G
    potentials = _c_transform_fill(C, rows, cols, np.asarray(log["u"], dtype=float),
                                   np.asarray(log["v"], dtype=float))
    cost = float(np.sum(G * C_active))
    logger.debug("LP exato (p=%s): %dx%d átomos, custo=%.12g", p, len(rows), len(cols), cost)
    return cost, Coupling(matrix, mu, nu), potentials


def solve_w2_exact(mu_bar: DiscreteMeasure, nu_bar: DiscreteMeasure,
                   max_atoms: Optional[int] = None) -> Tuple[float, Coupling, DualPotentials]:
    """
    W2² exato entre duas medidas de mesma massa (tipicamente probabilidades).

    Returns:
        (custo, plano, potenciais duais) com Σφ dμ̄ + Σψ dν̄ = custo
    """
    return solve_wp_exact(mu_bar, nu_bar, 2.0, max_atoms)


# ==================== SOLVER ENTRÓPICO ====================

def round_to_polytope(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Projeta um plano aproximado no politopo de transporte Π(a, b):
    reescala linhas e colunas para baixo e corrige o excesso com um termo de posto 1.
    """
    row_sums = P.sum(axis=1)
    x = np.minimum(np.divide(a, row_sums, out=np.ones_like(a), where=row_sums > 0), 1.0)
    P = P * x[:, None]
    col_sums = P.sum(axis=0)
    y = np.minimum(np.divide(b, col_sums, out=np.ones_like(b), where=col_sums > 0), 1.0)
    P = P * y[None, :]
    err_a = a - P.sum(axis=1)
    err_b = b - P.sum(axis=0)
    total = err_a.sum()
    if total > 0:
        P = P + np.outer(err_a, err_b) / total
    return P


def _sinkhorn_stage(log_a, log_b, C, eps, f, g, tol, max_iter, check_every=10):
    iterations = 0
    residual = np.inf
    while iterations < max_iter:
        f = -eps * logsumexp((g[None, :] - C) / eps + log_b[None, :], axis=1)
        g = -eps * logsumexp((f[:, None] - C) / eps + log_a[:, None], axis=0)
        iterations += 1
        if iterations % check_every == 0 or iterations == max_iter:
            log_P = (f[:, None] + g[None, :] - C) / eps + log_a[:, None] + log_b[None, :]
            residual = float(np.max(np.abs(np.exp(logsumexp(log_P, axis=1)) - np.exp(log_a))))
            if residual <= tol:
                break
    return f, g, iterations, residual


def solve_w2_entropic(mu_bar: DiscreteMeasure, nu_bar: DiscreteMeasure, eps: float,
                      max_iter: int = SINKHORN_MAX_ITER, tol: float = SINKHORN_TOL,
                      eps_scaling: bool = True) -> Tuple[float, Coupling, DualPotentials]:
    """
    W2² aproximado por Sinkhorn em domínio log com escalonamento de ε.

    O custo retornado é apenas a parte de transporte Σ π_ij c_ij do plano
    arredondado ao politopo (sem o termo de entropia).

    Args:
        mu_bar: Medida de origem
        nu_bar: Medida de destino, mesma massa
        eps: Regularização entrópica (> 0)
        max_iter: Total máximo de iterações (somando todos os níveis de ε)
        tol: Resíduo máximo de marginal
        eps_scaling: Se True, ε_k = max(ε, ε_0·0.5^k) partindo de ε_0 = max(c)

    Returns:
        (custo, plano, potenciais) com potenciais duplamente c-transformados,
        portanto viáveis: φ_i + ψ_j ≤ c_ij

    Raises:
        SolverError: Resíduo não finito ou acima de SINKHORN_ACCEPT_TOL ao fim de `max_iter`
    """
    if eps <= 0:
        raise MeasureError(f"ε deve ser positivo; recebido {eps}")
    mu, nu = _prepare(mu_bar, nu_bar)
    C_full = cost_matrix(mu.points, nu.points, 2.0)
    rows = np.flatnonzero(mu.weights > 0)
    cols = np.flatnonzero(nu.weights > 0)
    a = mu.weights[rows]
    b = nu.weights[cols] * (mu.weights[rows].sum() / nu.weights[cols].sum())
    C = C_full[np.ix_(rows, cols)]
    log_a, log_b = np.log(a), np.log(b)

    schedule = [eps]
    if eps_scaling:
        current = max(float(C.max()), eps)
        schedule = []
        while current > eps:
            schedule.append(current)
            current *= 0.5
        schedule.append(eps)

    f = np.zeros(len(a))
    g = np.zeros(len(b))
    total_iter = 0
    residual = np.inf
    for level, eps_k in enumerate(schedule):
        last = level == len(schedule) - 1
        remaining = max_iter - total_iter
        if last:
            stage_tol, stage_iter = tol, remaining
        else:
            # cada nível converge no próprio ε antes de reduzir
            stage_tol, stage_iter = max(tol, SINKHORN_ACCEPT_TOL), min(remaining, SINKHORN_STAGE_MAX_ITER)
        f, g, it, residual = _sinkhorn_stage(log_a, log_b, C, eps_k, f, g, stage_tol, stage_iter)
        total_iter += it
        logger.debug("Sinkhorn ε=%.3e: %d iterações, resíduo=%.3e", eps_k, it, residual)

    if not np.isfinite(residual) or residual > SINKHORN_ACCEPT_TOL:
        raise SolverError("Sinkhorn não convergiu", iterations=total_iter, residual=residual)
    if residual > tol:
        logger.warning("⚠️ Sinkhorn parou em %d iterações com resíduo %.3e; plano arredondado ao politopo.",
                       total_iter, residual)

    log_P = (f[:, None] + g[None, :] - C) / eps + log_a[:, None] + log_b[None, :]
    P = round_to_polytope(np.exp(log_P), a, b)

    matrix = np.zeros(C_full.shape)
    matrix[np.ix_(rows, cols)] = P
    psi = np.min(C - f[:, None], axis=0)
    phi = np.min(C - psi[None, :], axis=1)
    potentials = _c_transform_fill(C_full, rows, cols, phi, psi)
    cost = float(np.sum(P * C))
    return cost, Coupling(matrix, mu, nu), potentials


def solve_w2(mu_bar: DiscreteMeasure, nu_bar: DiscreteMeasure, eps: Optional[float] = None
             ) -> Tuple[float, Coupling, DualPotentials]:
    """
    Despacha para o solver exato (eps None ou 0) ou entrópico.

    Acima de EXACT_MAX_ATOMS átomos por lado o modo exato levanta SolverError;
    o modo entrópico precisa ser pedido explicitamente com eps > 0.
    """
    if not eps:
        return solve_w2_exact(mu_bar, nu_bar)
    return solve_w2_entropic(mu_bar, nu_bar, eps)
