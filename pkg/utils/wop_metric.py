"""
Módulo da Métrica WOP
Distância WOP entre medidas positivas finitas nas duas formulações
(dilatação das normalizadas e forma expandida), certificado dual,
mudança de ponto de referência e a generalização WOP_p.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from utils.errors import ConfigError, MeasureError
from utils.measures import (
    DiscreteMeasure,
    ReferenceLike,
    common_dim,
    moment2,
    normalize,
    pushforward_dilation,
    resolve_reference,
    with_dim,
)
from utils.ot_core import Coupling, DualPotentials, cost_matrix, solve_w2_exact, solve_wp_exact

logger = logging.getLogger(__name__)


# ==================== TIPOS ====================

@dataclass(frozen=True, eq=False)
class WopResult:
    """
    Resultado de uma distância WOP.

    distance² = mass_term + transport_term. O plano, quando presente,
    é entre as medidas normalizadas μ̄ e ν̄.
    """
    distance: float
    mass_term: float
    transport_term: float
    coupling: Optional[Coupling] = None
    p: float = 2.0


@dataclass(frozen=True, eq=False)
class NormalizedTransport:
    """W2 entre μ̄ e ν̄, resolvido uma vez e compartilhado pelas duas formulações."""
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    mu_bar: DiscreteMeasure
    nu_bar: DiscreteMeasure
    x0: np.ndarray
    w2_squared: float
    coupling: Coupling
    potentials: DualPotentials


class DualCertificate(NamedTuple):
    phi: np.ndarray
    psi: np.ndarray
    value: float


# ==================== BASE COMUM ====================

def normalized_transport(mu: DiscreteMeasure, nu: DiscreteMeasure,
                         x0: ReferenceLike = None) -> NormalizedTransport:
    """
    Resolve W2(μ̄, ν̄) com a convenção μ̄ = δ_{x0} para medidas nulas.

    Raises:
        MeasureError: Dimensões incompatíveis
    """
    dim = common_dim(mu, nu, x0=x0)
    mu, nu = with_dim(mu, dim), with_dim(nu, dim)
    ref = resolve_reference(x0, dim)
    mu_bar, nu_bar = normalize(mu, ref), normalize(nu, ref)
    cost, coupling, potentials = solve_w2_exact(mu_bar, nu_bar)
    return NormalizedTransport(mu, nu, mu_bar, nu_bar, ref, cost, coupling, potentials)


def lifted_measure(mu: DiscreteMeasure, x0: ReferenceLike = None) -> DiscreteMeasure:
    """Probabilidade dilatada T_{m_μ}#μ̄."""
    return pushforward_dilation(normalize(mu, x0), mu.mass, x0)


def _result(mass_term: float, transport_term: float, coupling: Optional[Coupling], p: float = 2.0) -> WopResult:
    # arredondamento pode deixar WOP² levemente negativo quando μ = ν
    total = max(mass_term + transport_term, 0.0)
    return WopResult(float(total ** (1.0 / p)), float(mass_term), float(transport_term), coupling, p)


# ==================== DISTÂNCIAS ====================

def wop_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, x0: ReferenceLike = None,
                 transport: Optional[NormalizedTransport] = None) -> WopResult:
    """
    WOP² = (m_μ - m_ν)² + W2²(T_{m_μ}#μ̄, T_{m_ν}#ν̄).

    O termo de transporte é avaliado nas medidas dilatadas usando o plano
    ótimo entre μ̄ e ν̄, que também é ótimo entre as dilatadas.

    Args:
        mu, nu: Medidas positivas (podem ser nulas)
        x0: Ponto de referência (padrão: origem)
        transport: Base já resolvida por `normalized_transport` (opcional)

    Returns:
        WopResult
    """
    base = transport or normalized_transport(mu, nu, x0)
    m_mu, m_nu = base.mu.mass, base.nu.mass
    lifted_x = m_mu * (base.mu_bar.points - base.x0) + base.x0
    lifted_y = m_nu * (base.nu_bar.points - base.x0) + base.x0
    pi = base.coupling.matrix
    transport_term = float(np.sum(pi * cost_matrix(lifted_x, lifted_y)))
    return _result((m_mu - m_nu) ** 2, transport_term, base.coupling)


def wop_distance_defbis(mu: DiscreteMeasure, nu: DiscreteMeasure, x0: ReferenceLike = None,
                        transport: Optional[NormalizedTransport] = None) -> WopResult:
    """
    Forma expandida:
    WOP² = (m_μ - m_ν)² + (m_μ - m_ν)(M_{x0}(μ) - M_{x0}(ν)) + m_μ m_ν W2²(μ̄, ν̄).
    """
    base = transport or normalized_transport(mu, nu, x0)
    m_mu, m_nu = base.mu.mass, base.nu.mass
    dm = m_mu - m_nu
    transport_term = dm * (moment2(base.mu, base.x0) - moment2(base.nu, base.x0)) \
        + m_mu * m_nu * base.w2_squared
    return _result(dm ** 2, transport_term, base.coupling)


def wop_cost(a: float, b: float, x0, x, y) -> float:
    """
    Custo c = a(a-b)|x-x0|² + b(b-a)|y-x0|² + ab|x-y|², igual a |a(x-x0) - b(y-x0)|².

    Raises:
        MeasureError: a < 0 ou b < 0
    """
    if a < 0 or b < 0:
        raise MeasureError(f"Massas devem ser não-negativas: a={a}, b={b}")
    x0, x, y = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x0, x, y))
    dx, dy, dxy = x - x0, y - x0, x - y
    return float(a * (a - b) * np.dot(dx, dx) + b * (b - a) * np.dot(dy, dy) + a * b * np.dot(dxy, dxy))


def reference_shift(mu: DiscreteMeasure, nu: DiscreteMeasure,
                    x0: ReferenceLike, y0: ReferenceLike) -> float:
    """
    Correção Δ tal que WOP²_{x0}(μ, ν) = WOP²_{y0}(μ, ν) + Δ.

    Δ = (m_μ - m_ν)[M_{x0}(μ) - M_{y0}(μ) + M_{y0}(ν) - M_{x0}(ν)]
    """
    dim = common_dim(mu, nu, x0=x0)
    common_dim(mu, nu, x0=y0)
    mu, nu = with_dim(mu, dim), with_dim(nu, dim)
    dm = mu.mass - nu.mass
    if dm == 0:
        return 0.0
    return float(dm * (moment2(mu, x0) - moment2(mu, y0) + moment2(nu, y0) - moment2(nu, x0)))


def wop_to_null(mu: DiscreteMeasure, x0: ReferenceLike = None) -> float:
    """Forma fechada WOP(μ, 0_M) = √(m_μ² + m_μ·M_{x0}(μ))."""
    m = mu.mass
    return float(np.sqrt(m * m + m * moment2(mu, x0)))


# ==================== CERTIFICADO DUAL ====================

def dual_certificate(mu: DiscreteMeasure, nu: DiscreteMeasure, x0: ReferenceLike = None,
                     transport: Optional[NormalizedTransport] = None) -> DualCertificate:
    """
    Potenciais (φ̃, ψ̃) da formulação dual de WOP² e o valor dual.

    Os potenciais de W2 entre as dilatadas são obtidos exatamente dos
    potenciais entre μ̄ e ν̄; o termo (m_μ - m_ν)² é repartido igualmente.
    Viabilidade: m_μ φ̃(x_i) + m_ν ψ̃(y_j) ≤ (m_μ - m_ν)² + |T_{m_μ}x_i - T_{m_ν}y_j|².

    Raises:
        MeasureError: Alguma das medidas é nula
    """
    if mu.is_null or nu.is_null:
        raise MeasureError("Certificado dual indefinido para a medida nula.")
    base = transport or normalized_transport(mu, nu, x0)
    m_mu, m_nu = base.mu.mass, base.nu.mass
    sq_x = np.sum((base.mu.points - base.x0) ** 2, axis=1)
    sq_y = np.sum((base.nu.points - base.x0) ** 2, axis=1)

    phi_lift = m_mu * m_nu * base.potentials.phi + m_mu * (m_mu - m_nu) * sq_x
    psi_lift = m_mu * m_nu * base.potentials.psi + m_nu * (m_nu - m_mu) * sq_y
    share = 0.5 * (m_mu - m_nu) ** 2
    phi = (phi_lift + share) / m_mu
    psi = (psi_lift + share) / m_nu
    value = float(np.dot(phi, base.mu.weights) + np.dot(psi, base.nu.weights))
    return DualCertificate(phi, psi, value)


def certificate_feasibility_gap(mu: DiscreteMeasure, nu: DiscreteMeasure,
                                certificate: DualCertificate, x0: ReferenceLike = None) -> float:
    """max_ij [m_μφ̃_i + m_νψ̃_j - (m_μ - m_ν)² - |T_{m_μ}x_i - T_{m_ν}y_j|²]; ≤ 0 se viável."""
    dim = common_dim(mu, nu, x0=x0)
    ref = resolve_reference(x0, dim)
    m_mu, m_nu = mu.mass, nu.mass
    C = cost_matrix(m_mu * (mu.points - ref) + ref, m_nu * (nu.points - ref) + ref)
    lhs = m_mu * certificate.phi[:, None] + m_nu * certificate.psi[None, :]
    return float(np.max(lhs - (m_mu - m_nu) ** 2 - C))


# ==================== WOP_p ====================

def wop_p_result(mu: DiscreteMeasure, nu: DiscreteMeasure, x0: ReferenceLike = None,
                 p: float = 2.0) -> WopResult:
    """
    WOP_p^p = |m_μ - m_ν|^p + W_p^p(T_{m_μ}#μ̄, T_{m_ν}#ν̄) com custo |x - y|^p.

    Raises:
        ConfigError: p < 1
    """
    if p < 1:
        raise ConfigError(f"Expoente p deve ser ≥ 1; recebido {p}")
    dim = common_dim(mu, nu, x0=x0)
    mu, nu = with_dim(mu, dim), with_dim(nu, dim)
    ref = resolve_reference(x0, dim)
    cost, coupling, _ = solve_wp_exact(lifted_measure(mu, ref), lifted_measure(nu, ref), p)
    return _result(abs(mu.mass - nu.mass) ** p, cost, coupling, p)


def wop_p_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, x0: ReferenceLike = None,
                   p: float = 2.0) -> float:
    """Distância WOP_p (escalar)."""
    return wop_p_result(mu, nu, x0, p).distance
