"""
Módulo de Transporte com Entropia (ET)
f-divergências de Csiszár, valor ET, distância de Hellinger-Kantorovich,
cota ET para a medida nula e comparação dos perfis de massa das geodésicas
WOP e HK.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize, minimize_scalar
from scipy.spatial.distance import cdist
from scipy.special import logsumexp, xlogy

from utils.errors import ConfigError, MeasureError, SolverError
from utils.measures import DiscreteMeasure, common_dim, measures_equal, prune, with_dim

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * np.pi
ET_MAX_ITER = 100_000
ET_TOL = 1e-9
EXACT_MAX_ATOMS = 2
HK_PROFILE_LABEL = "entropic-plan proxy"


# ==================== ENTROPIAS ====================

@dataclass(frozen=True, eq=False)
class EntropyFunction:
    """
    Função de entropia f convexa com f(1) = 0.

    `f_at_zero` é f(0) e `f_inf_slope` é f'_∞(1) = lim f(t)/t (podem ser +∞).
    `df` é a derivada (ou subgradiente) usada na minimização direta.
    `sinkhorn_kind` indica a atualização proximal do Sinkhorn desbalanceado
    ("kl" ou "tv"); None restringe a entropia a ε = 0.
    """
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f_at_zero: float
    f_inf_slope: float
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sinkhorn_kind: Optional[str] = None
    rho: float = 1.0

    def __post_init__(self):
        if abs(float(self.f(np.array([1.0]))[0])) > 1e-12:
            raise ConfigError(f"Entropia {self.name}: f(1) deve ser 0.")
        grid = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 61)])
        a, b = grid[:-1], grid[1:]
        with np.errstate(invalid="ignore"):
            mid = self(0.5 * (a + b))
            avg = 0.5 * (self(a) + self(b))
            bad = np.isfinite(avg) & (mid > avg + 1e-12 * np.maximum(1.0, np.abs(avg)))
        if np.any(bad):
            raise ConfigError(f"Entropia {self.name} não é convexa na grade de teste.")

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.f(t), dtype=float)
        return np.where(t == 0, self.f_at_zero, out)


def _log_clipped(t):
    return np.log(np.maximum(t, 1e-300))


def kl_entropy() -> EntropyFunction:
    """f(t) = t log t + 1 - t (Kullback-Leibler, usada por HK)."""
    return EntropyFunction("kl", lambda t: xlogy(t, t) + 1.0 - t, 1.0, np.inf,
                           df=_log_clipped, sinkhorn_kind="kl")


def total_variation_entropy() -> EntropyFunction:
    """f(t) = |t - 1|."""
    return EntropyFunction("tv", lambda t: np.abs(t - 1.0), 1.0, 1.0,
                           df=lambda t: np.sign(t - 1.0), sinkhorn_kind="tv")


def quadratic_entropy() -> EntropyFunction:
    """f(t) = (t - 1)²."""
    return EntropyFunction("quadratic", lambda t: (t - 1.0) ** 2, 1.0, np.inf,
                           df=lambda t: 2.0 * (t - 1.0))


def burg_entropy() -> EntropyFunction:
    """f(t) = t - 1 - log t; f(0) = +∞ e f'_∞(1) = 1."""
    return EntropyFunction("burg", lambda t: t - 1.0 - np.log(t), np.inf, 1.0,
                           df=lambda t: 1.0 - 1.0 / np.maximum(t, 1e-300))


def barrier_entropy() -> EntropyFunction:
    """f(t) = (t - 1)² + t - 1 - log t; f(0) = f'_∞(1) = +∞."""
    return EntropyFunction("barrier", lambda t: (t - 1.0) ** 2 + t - 1.0 - np.log(t), np.inf, np.inf,
                           df=lambda t: 2.0 * (t - 1.0) + 1.0 - 1.0 / np.maximum(t, 1e-300))


ENTROPIES: Dict[str, Callable[[], EntropyFunction]] = {
    "kl": kl_entropy,
    "tv": total_variation_entropy,
    "quadratic": quadratic_entropy,
    "burg": burg_entropy,
    "barrier": barrier_entropy,
}


# ==================== PROBLEMAS ====================

def hk_cost(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """c(x, y) = -2 log cos(|x - y| ∧ π/2); +∞ a partir de π/2."""
    d = cdist(X, Y, metric="euclidean")
    C = np.full(d.shape, np.inf)
    near = d < HALF_PI
    C[near] = -2.0 * np.log(np.cos(d[near]))
    return C


def squared_cost(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return cdist(X, Y, metric="sqeuclidean")


@dataclass(frozen=True, eq=False)
class EtProblem:
    entropy: EntropyFunction
    cost: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "et"

    def cost_matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Avalia o custo e verifica c ≥ 0."""
        C = np.asarray(self.cost(X, Y), dtype=float)
        if np.any(C < -1e-12):
            raise MeasureError(f"Custo negativo no problema {self.name}.")
        return np.maximum(C, 0.0)

    def check_diagonal(self, X: np.ndarray, tol: float = 1e-12) -> bool:
        """c(x, x) = 0 nos pontos dados."""
        if X.shape[0] == 0:
            return True
        return bool(np.all(np.abs(np.diag(np.asarray(self.cost(X, X)))) <= tol))


def hk_problem() -> EtProblem:
    """Problema de Hellinger-Kantorovich: entropia KL e custo -2 log cos(d ∧ π/2)."""
    return EtProblem(kl_entropy(), hk_cost, "hk")


@dataclass(frozen=True, eq=False)
class EtResult:
    value: float
    plan: np.ndarray
    iterations: int
    residual: float
    converged: bool
    eps: float
    method: str


# ==================== DIVERGÊNCIAS ====================

def _divergence(gamma: np.ndarray, mu: np.ndarray, entropy: EntropyFunction) -> float:
    """D_f(γ|μ) para vetores no mesmo suporte; ∞·0 = 0."""
    gamma = np.asarray(gamma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    on = mu > 0
    total = 0.0
    if np.any(on):
        vals = entropy(gamma[on] / mu[on]) * mu[on]
        total += float(np.sum(vals))
    singular = float(gamma[~on].sum())
    if singular > 0:
        total += entropy.f_inf_slope * singular
    return total


def f_divergence(gamma_marginal: DiscreteMeasure, mu: DiscreteMeasure, entropy: EntropyFunction) -> float:
    """
    Divergência de Csiszár D_f(γ|μ) = Σ μ_i f(γ_i/μ_i) + f'_∞(1)·(massa de γ singular a μ).

    Átomos são casados por coordenadas (duplicatas somadas).

    Returns:
        float (pode ser +∞)
    """
    dim = common_dim(gamma_marginal, mu)
    gamma_marginal, mu = with_dim(gamma_marginal, dim), with_dim(mu, dim)
    points = np.concatenate([gamma_marginal.points, mu.points], axis=0)
    if points.shape[0] == 0:
        return 0.0
    _, inverse = np.unique(points, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    k = int(inverse.max()) + 1
    n = gamma_marginal.n_atoms
    g = np.bincount(inverse[:n], weights=gamma_marginal.weights, minlength=k)
    m = np.bincount(inverse[n:], weights=mu.weights, minlength=k)
    return _divergence(g, m, entropy)


def et_null_bound(entropy: EntropyFunction) -> float:
    """Cota ET(μ, 0_M) ≤ min(f(0), f'_∞(1)) para probabilidades μ."""
    return float(min(entropy.f_at_zero, entropy.f_inf_slope))


def _null_value(mu: DiscreteMeasure, entropy: EntropyFunction) -> float:
    """
    ET(μ, 0_M) com γ diagonal sobre supp(μ): m_μ·min_{s≥0} [f(s) + s·f'_∞(1)].
    """
    if mu.mass == 0:
        return 0.0
    if np.isinf(entropy.f_inf_slope):
        return float(entropy.f_at_zero * mu.mass)

    def per_unit(s):
        return float(entropy(np.array([s]))[0] + s * entropy.f_inf_slope)

    best = min(per_unit(0.0), per_unit(1.0))
    res = minimize_scalar(per_unit, bounds=(0.0, 10.0), method="bounded", options={"xatol": 1e-12})
    if res.success:
        best = min(best, float(res.fun))
    return float(best * mu.mass)


# ==================== SOLVERS ====================

def _primal(P: np.ndarray, C: np.ndarray, a: np.ndarray, b: np.ndarray, entropy: EntropyFunction) -> float:
    finite = np.isfinite(C)
    transport = float(np.sum(P[finite] * C[finite]))
    return transport + _divergence(P.sum(axis=1), a, entropy) + _divergence(P.sum(axis=0), b, entropy)


def _solve_exact_small(a, b, C, entropy: EntropyFunction) -> EtResult:
    """Minimização direta sobre γ ≥ 0 nas entradas de custo finito (suportes pequenos)."""
    finite = np.isfinite(C)
    idx = np.argwhere(finite)
    zero_value = _primal(np.zeros_like(C), C, a, b, entropy)
    if idx.size == 0:
        return EtResult(zero_value, np.zeros_like(C), 0, 0.0, True, 0.0, "exact")

    def unpack(x):
        P = np.zeros_like(C)
        P[idx[:, 0], idx[:, 1]] = x
        return P

    def objective(x):
        return _primal(unpack(x), C, a, b, entropy)

    jac = None
    if entropy.df is not None:
        def jac(x):
            P = unpack(x)
            ra = entropy.df(P.sum(axis=1) / a)
            rb = entropy.df(P.sum(axis=0) / b)
            return ra[idx[:, 0]] + rb[idx[:, 1]] + C[idx[:, 0], idx[:, 1]]

    starts = [
        np.sqrt(a[idx[:, 0]] * b[idx[:, 1]]) * np.exp(-0.5 * C[idx[:, 0], idx[:, 1]]),
        np.minimum(a[idx[:, 0]], b[idx[:, 1]]),
    ]
    best_x, best_value, iterations = np.zeros(len(idx)), zero_value, 0
    for x_start in starts:
        res = minimize(objective, x_start, jac=jac, method="L-BFGS-B",
                       bounds=[(0.0, None)] * len(idx),
                       options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10_000})
        iterations += int(res.nit)
        if np.isfinite(res.fun) and res.fun < best_value:
            best_x, best_value = res.x, float(res.fun)
    return EtResult(best_value, unpack(best_x), iterations, 0.0, True, 0.0, "exact")


def _aprox(s: np.ndarray, entropy: EntropyFunction, eps: float) -> np.ndarray:
    if entropy.sinkhorn_kind == "kl":
        return s / (1.0 + eps / entropy.rho)
    return np.clip(s, -entropy.rho, entropy.rho)


def _softmin(pot: np.ndarray, log_w: np.ndarray, C: np.ndarray, finite: np.ndarray,
             eps: float, axis: int) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        if axis == 1:
            E = np.where(finite, (pot[None, :] - C) / eps, -np.inf) + log_w[None, :]
        else:
            E = np.where(finite, (pot[:, None] - C) / eps, -np.inf) + log_w[:, None]
    return -eps * logsumexp(E, axis=axis)


def _log_plan(f, g, log_a, log_b, C, finite, eps):
    with np.errstate(invalid="ignore"):
        L = np.where(finite, (f[:, None] + g[None, :] - C) / eps, -np.inf)
    return L + log_a[:, None] + log_b[None, :]


def _sinkhorn_level(f, g, log_a, log_b, C, finite, eps, entropy, tol, max_iter):
    residual = np.inf
    it = 0
    while it < max_iter:
        f_old, g_old = f, g
        f = _aprox(_softmin(g, log_b, C, finite, eps, axis=1), entropy, eps)
        g = _aprox(_softmin(f, log_a, C, finite, eps, axis=0), entropy, eps)
        if entropy.sinkhorn_kind == "kl":
            # translação ótima (f + λ, g - λ): o plano não muda
            rho = entropy.rho
            log_A = logsumexp(log_a - f / rho)
            log_B = logsumexp(log_b - g / rho)
            if np.isfinite(log_A) and np.isfinite(log_B):
                lam = 0.5 * rho * (log_A - log_B)
                f, g = f + lam, g - lam
        it += 1
        with np.errstate(invalid="ignore"):
            df = np.abs(f - f_old)[np.isfinite(f) & np.isfinite(f_old)]
            dg = np.abs(g - g_old)[np.isfinite(g) & np.isfinite(g_old)]
        residual = float(max(df.max(initial=0.0), dg.max(initial=0.0)))
        if residual <= tol:
            break
    return f, g, it, residual


def _solve_sinkhorn(a, b, C, entropy: EntropyFunction, eps: float, tol: float, max_iter: int) -> EtResult:
    if entropy.sinkhorn_kind not in ("kl", "tv"):
        raise ConfigError(f"Entropia {entropy.name} não tem atualização de Sinkhorn; use ε = 0.")
    finite = np.isfinite(C)
    if not finite.any():
        P = np.zeros_like(C)
        return EtResult(_primal(P, C, a, b, entropy), P, 0, 0.0, True, eps, "sinkhorn")

    log_a, log_b = np.log(a), np.log(b)
    f, g = np.zeros(a.size), np.zeros(b.size)
    schedule = []
    k = 0
    while 0.5 ** k > eps:
        schedule.append(0.5 ** k)
        k += 1
    schedule.append(eps)

    total, residual = 0, np.inf
    for level, eps_k in enumerate(schedule):
        last = level == len(schedule) - 1
        remaining = max_iter - total
        f, g, it, residual = _sinkhorn_level(f, g, log_a, log_b, C, finite, eps_k, entropy,
                                             tol if last else max(tol, 1e-6),
                                             remaining if last else min(remaining, 2000))
        total += it
        logger.debug("Sinkhorn desbalanceado ε=%.3e: %d iterações, resíduo=%.3e", eps_k, it, residual)

    P = np.exp(_log_plan(f, g, log_a, log_b, C, finite, eps))
    converged = residual <= tol
    if not converged:
        logger.warning("Sinkhorn desbalanceado não convergiu: %d iterações, resíduo %.3e", total, residual)
    return EtResult(_primal(P, C, a, b, entropy), P, total, residual, converged, eps, "sinkhorn")


def solve_et(mu: DiscreteMeasure, nu: DiscreteMeasure, problem: EtProblem, eps: float = 0.0,
             tol: float = ET_TOL, max_iter: int = ET_MAX_ITER) -> EtResult:
    """
    Resolve inf_γ≥0 D_f(P₀#γ|μ) + D_f(P₁#γ|ν) + Σ γ_ij c_ij.

    ε > 0 usa Sinkhorn desbalanceado em domínio log com escalonamento
    ε_k = max(ε, 0.5^k) e avalia o primal não regularizado no plano obtido.
    ε = 0 minimiza diretamente e só é aceito com até dois átomos por lado.
    Com uma das medidas nula o valor é exato (plano diagonal).

    Raises:
        ConfigError: ε < 0, ou ε = 0 com suportes grandes
    """
    if eps < 0:
        raise ConfigError(f"ε deve ser ≥ 0; recebido {eps}")
    dim = common_dim(mu, nu)
    mu, nu = prune(with_dim(mu, dim)), prune(with_dim(nu, dim))
    entropy = problem.entropy

    if mu.n_atoms == 0 or nu.n_atoms == 0:
        value = _null_value(mu, entropy) + _null_value(nu, entropy)
        return EtResult(value, np.zeros((mu.n_atoms, nu.n_atoms)), 0, 0.0, True, eps, "null")

    if measures_equal(mu, nu) and problem.check_diagonal(mu.points):
        plan = np.zeros((mu.n_atoms, nu.n_atoms))
        for i, x in enumerate(mu.points):
            j = int(np.argmin(np.sum((nu.points - x) ** 2, axis=1)))
            plan[i, j] += mu.weights[i]
        return EtResult(0.0, plan, 0, 0.0, True, eps, "identity")

    C = problem.cost_matrix(mu.points, nu.points)
    a, b = mu.weights, nu.weights
    if eps == 0:
        if mu.n_atoms > EXACT_MAX_ATOMS or nu.n_atoms > EXACT_MAX_ATOMS:
            raise ConfigError(
                f"ε = 0 só é aceito com até {EXACT_MAX_ATOMS} átomos por lado "
                f"(recebido {mu.n_atoms}×{nu.n_atoms})."
            )
        return _solve_exact_small(a, b, C, entropy)
    return _solve_sinkhorn(a, b, C, entropy, eps, tol, max_iter)


def et_value(mu: DiscreteMeasure, nu: DiscreteMeasure, problem: EtProblem, eps: float = 0.0) -> float:
    """Valor ET (ver `solve_et`); não-convergência é registrada em log."""
    return solve_et(mu, nu, problem, eps).value


def hk_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = 0.0) -> float:
    """Distância de Hellinger-Kantorovich √ET_HK(μ, ν)."""
    return float(np.sqrt(max(et_value(mu, nu, hk_problem(), eps), 0.0)))


def hk_dirac_closed_form(a: float, b: float, d: float) -> float:
    """HK²(a·δ_x, b·δ_y) = a + b - 2√(ab)·cos(d ∧ π/2), d = |x - y|."""
    return float(a + b - 2.0 * np.sqrt(a * b) * np.cos(min(d, HALF_PI)))


# ==================== PERFIS DE MASSA ====================

def hk_mass_profile(plan: np.ndarray, mu: DiscreteMeasure, nu: DiscreteMeasure,
                    times: np.ndarray) -> np.ndarray:
    """
    Massa do interpolante HK reconstruído a partir do plano.

    Cada par (i, j) com γ_ij > 0 leva A = μ_i γ_ij/γ¹_i em B = ν_j γ_ij/γ²_j
    com massa (1-t)²A + t²B + 2t(1-t)√(AB)cos(d_ij ∧ π/2); massa de μ sem
    transporte decai como (1-t)² e massa de ν sem origem cresce como t².
    """
    times = np.asarray(times, dtype=float)
    row = plan.sum(axis=1)
    col = plan.sum(axis=0)
    rows, cols = np.nonzero(plan > 0)
    A = mu.weights[rows] * plan[rows, cols] / row[rows]
    B = nu.weights[cols] * plan[rows, cols] / col[cols]
    d = np.linalg.norm(mu.points[rows] - nu.points[cols], axis=1)
    cross = np.sqrt(A * B) * np.cos(np.minimum(d, HALF_PI))
    lonely_mu = float(mu.weights[row <= 0].sum())
    lonely_nu = float(nu.weights[col <= 0].sum())
    s = 1.0 - times
    return (s ** 2 * (A.sum() + lonely_mu) + times ** 2 * (B.sum() + lonely_nu)
            + 2.0 * times * s * cross.sum())


def compare_geodesic_masses(mu: DiscreteMeasure, nu: DiscreteMeasure, steps: int = 100,
                            eps: float = 1e-3, tol: float = 1e-7) -> Tuple[pd.DataFrame, Dict]:
    """
    Tabela (t, mass_wop, mass_hk) em `steps` + 1 instantes uniformes.

    O perfil WOP é exato (linear). O perfil HK é um proxy obtido do plano
    entrópico (ver `hk_mass_profile`), rotulado nos metadados.

    Raises:
        MeasureError: Alguma medida com massa nula
        SolverError: Sinkhorn não convergiu
    """
    if mu.mass <= 0 or nu.mass <= 0:
        raise MeasureError("Comparação de geodésicas exige massas positivas.")
    if steps <= 0:
        raise ConfigError(f"Número de passos deve ser positivo; recebido {steps}")
    dim = common_dim(mu, nu)
    mu, nu = prune(with_dim(mu, dim)), prune(with_dim(nu, dim))
    times = np.linspace(0.0, 1.0, steps + 1)

    problem = hk_problem()
    if eps == 0 and mu.n_atoms <= EXACT_MAX_ATOMS and nu.n_atoms <= EXACT_MAX_ATOMS:
        result = solve_et(mu, nu, problem, 0.0)
    else:
        result = solve_et(mu, nu, problem, eps if eps > 0 else 1e-3, tol=tol)
    if not result.converged:
        raise SolverError("Sinkhorn HK não convergiu", iterations=result.iterations, residual=result.residual)

    table = pd.DataFrame({
        "t": times,
        "mass_wop": (1.0 - times) * mu.mass + times * nu.mass,
        "mass_hk": hk_mass_profile(result.plan, mu, nu, times),
    })
    metadata = {
        "eps": result.eps,
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": result.converged,
        "method": result.method,
        "hk_squared": result.value,
        "hk_profile": HK_PROFILE_LABEL,
    }
    return table, metadata
