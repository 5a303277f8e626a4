"""
Módulo de Medidas
Medidas positivas discretas em R^d: construção validada, normalização,
dilatação em torno do ponto de referência, momentos e a classe M_K.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from utils.errors import MeasureError

logger = logging.getLogger(__name__)


# ==================== TIPOS ====================

@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """
    Nuvem de pontos ponderada em R^d com pesos não-negativos.

    `points` tem forma (n, d) e `weights` forma (n,); ambos são somente-leitura.
    A medida nula é o suporte vazio. `dim == 0` só ocorre para a medida nula
    sem dimensão declarada e é compatível com qualquer outra dimensão.
    """
    points: np.ndarray
    weights: np.ndarray
    dim: int

    @property
    def mass(self) -> float:
        return float(self.weights.sum()) if self.weights.size else 0.0

    @property
    def n_atoms(self) -> int:
        return int(self.weights.shape[0])

    @property
    def is_null(self) -> bool:
        return self.mass == 0.0

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n={self.n_atoms}, dim={self.dim}, mass={self.mass:.6g})"


@dataclass(frozen=True, eq=False)
class ReferencePoint:
    """Ponto de referência x0 das dilatações T_a(x) = a(x - x0) + x0."""
    x0: np.ndarray

    @classmethod
    def origin(cls, dim: int) -> "ReferencePoint":
        return cls(np.zeros(max(dim, 1)))

    @property
    def dim(self) -> int:
        return int(self.x0.shape[0])


ReferenceLike = Union[None, float, Sequence[float], np.ndarray, ReferencePoint]


# ==================== CONSTRUÇÃO ====================

def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def new_measure(points, weights, dim: Optional[int] = None) -> DiscreteMeasure:
    """
    Constrói uma medida discreta validada.

    Pontos escalares (lista plana) são lidos como átomos em R^1; um único
    ponto em R^d deve ser passado como [[x_1, ..., x_d]].

    Args:
        points: Coordenadas dos átomos, forma (n, d) ou (n,)
        weights: Pesos não-negativos, forma (n,)
        dim: Dimensão declarada (obrigatória apenas para distinguir nulas)

    Returns:
        DiscreteMeasure com cópias somente-leitura dos arrays

    Raises:
        MeasureError: Tamanhos/dimensões incompatíveis, peso negativo ou valor não finito
    """
    try:
        pts = np.array(points, dtype=float)
        wts = np.array(weights, dtype=float).reshape(-1)
    except (TypeError, ValueError) as e:
        raise MeasureError(f"Medida malformada: {e}") from e

    if pts.size == 0:
        if wts.size != 0:
            raise MeasureError("Pesos informados para um suporte vazio.")
        d = dim if dim is not None else (pts.shape[1] if pts.ndim == 2 else 0)
        return DiscreteMeasure(_readonly(np.zeros((0, d))), _readonly(np.zeros(0)), int(d))

    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    elif pts.ndim != 2:
        raise MeasureError(f"Pontos devem ter forma (n, d); recebido {pts.shape}.")

    if pts.shape[0] != wts.shape[0]:
        raise MeasureError(
            f"Número de pontos ({pts.shape[0]}) difere do número de pesos ({wts.shape[0]})."
        )
    if dim is not None and dim != 0 and pts.shape[1] != dim:
        raise MeasureError(f"Dimensão declarada {dim} difere da dimensão dos pontos {pts.shape[1]}.")
    if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(wts)):
        raise MeasureError("Coordenadas e pesos devem ser finitos.")
    if np.any(wts < 0):
        raise MeasureError(f"Peso negativo encontrado: {wts.min()}")

    return DiscreteMeasure(_readonly(pts), _readonly(wts), int(pts.shape[1]))


def null_measure(dim: int = 0) -> DiscreteMeasure:
    """Medida nula 0_M."""
    return new_measure([], [], dim=dim)


def dirac(x, mass: float = 1.0) -> DiscreteMeasure:
    """Medida mass·δ_x."""
    point = np.atleast_1d(np.asarray(x, dtype=float))
    return new_measure(point.reshape(1, -1), [mass])


# ==================== DIMENSÃO E REFERÊNCIA ====================

def with_dim(mu: DiscreteMeasure, dim: int) -> DiscreteMeasure:
    """Fixa a dimensão de uma medida nula sem dimensão; demais medidas são verificadas."""
    if mu.dim == dim:
        return mu
    if mu.dim == 0 and mu.n_atoms == 0:
        return null_measure(dim)
    raise MeasureError(f"Dimensão incompatível: esperado {dim}, recebido {mu.dim}.")


def common_dim(*measures: DiscreteMeasure, x0: ReferenceLike = None) -> int:
    """
    Dimensão comum a um conjunto de medidas (e ao ponto de referência, se dado).

    Raises:
        MeasureError: Duas medidas (ou x0) com dimensões diferentes
    """
    dims = {m.dim for m in measures if m.dim != 0}
    if isinstance(x0, ReferencePoint):
        dims.add(x0.dim)
    elif x0 is not None and np.ndim(x0) > 0:
        dims.add(int(np.size(x0)))
    if len(dims) > 1:
        raise MeasureError(f"Dimensões incompatíveis: {sorted(dims)}")
    return dims.pop() if dims else 1


def resolve_reference(x0: ReferenceLike, dim: int) -> np.ndarray:
    """
    Converte x0 (None, escalar, vetor ou ReferencePoint) em vetor de dimensão `dim`.

    None representa a origem. Um escalar só é aceito em R^1, exceto o zero,
    que é lido como a origem em qualquer dimensão.
    """
    dim = max(dim, 1)
    if x0 is None:
        return np.zeros(dim)
    if isinstance(x0, ReferencePoint):
        ref = x0.x0
    else:
        ref = np.atleast_1d(np.asarray(x0, dtype=float))
        if ref.shape == (1,) and dim > 1 and ref[0] == 0.0:
            ref = np.zeros(dim)
    if ref.ndim != 1 or ref.shape[0] != dim:
        raise MeasureError(f"Ponto de referência com dimensão {ref.shape}, esperado ({dim},).")
    if not np.all(np.isfinite(ref)):
        raise MeasureError("Ponto de referência deve ter coordenadas finitas.")
    return ref


def reference_point(x0, dim: Optional[int] = None) -> ReferencePoint:
    """Constrói um ReferencePoint validado."""
    ref = np.atleast_1d(np.asarray(x0, dtype=float))
    return ReferencePoint(_readonly(resolve_reference(ref, dim if dim is not None else ref.shape[0]).copy()))


# ==================== OPERAÇÕES BÁSICAS ====================

def total_mass(mu: DiscreteMeasure) -> float:
    return mu.mass


def scale(mu: DiscreteMeasure, a: float) -> DiscreteMeasure:
    """Retorna a·μ."""
    if a < 0:
        raise MeasureError(f"Fator de escala negativo: {a}")
    return new_measure(mu.points, mu.weights * a, dim=mu.dim)


def prune(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Remove átomos de peso zero."""
    keep = mu.weights > 0
    if keep.all():
        return mu
    return new_measure(mu.points[keep], mu.weights[keep], dim=mu.dim)


def merge_atoms(mu: DiscreteMeasure) -> DiscreteMeasure:
    """
    Forma canônica: átomos coincidentes somados, ordem lexicográfica, sem pesos zero.
    """
    mu = prune(mu)
    if mu.n_atoms == 0:
        return mu
    unique_points, inverse = np.unique(mu.points, axis=0, return_inverse=True)
    merged = np.bincount(inverse.reshape(-1), weights=mu.weights, minlength=unique_points.shape[0])
    return new_measure(unique_points, merged, dim=mu.dim)


def measures_equal(mu: DiscreteMeasure, nu: DiscreteMeasure, atol: float = 1e-12) -> bool:
    """Igualdade atômica após merge_atoms."""
    a, b = merge_atoms(mu), merge_atoms(nu)
    if a.n_atoms != b.n_atoms:
        return False
    if a.n_atoms == 0:
        return True
    if a.dim != b.dim:
        return False
    return bool(np.allclose(a.points, b.points, rtol=0, atol=atol)
                and np.allclose(a.weights, b.weights, rtol=0, atol=atol))


def normalize(mu: DiscreteMeasure, x0: ReferenceLike = None) -> DiscreteMeasure:
    """
    Medida normalizada μ̄ = μ/m_μ, ou δ_{x0} se μ é nula.

    Args:
        mu: Medida de entrada
        x0: Ponto de referência (padrão: origem)

    Returns:
        DiscreteMeasure de massa 1
    """
    m = mu.mass
    if m > 0:
        return new_measure(mu.points, mu.weights / m, dim=mu.dim)
    dim = common_dim(mu, x0=x0)
    ref = resolve_reference(x0, dim)
    return new_measure(ref.reshape(1, -1), [1.0])


def pushforward_dilation(mu: DiscreteMeasure, a: float, x0: ReferenceLike = None) -> DiscreteMeasure:
    """
    Imagem de μ pela dilatação T_a(x) = a(x - x0) + x0; pesos inalterados.

    Raises:
        MeasureError: a < 0
    """
    if a < 0:
        raise MeasureError(f"Fator de dilatação negativo: {a}")
    if mu.n_atoms == 0:
        return mu
    ref = resolve_reference(x0, common_dim(mu, x0=x0))
    return new_measure(a * (mu.points - ref) + ref, mu.weights, dim=mu.dim)


# ==================== MOMENTOS ====================

def moment_p(mu: DiscreteMeasure, x0: ReferenceLike = None, p: float = 2.0) -> float:
    """M_{x0,p}(μ) = Σ w_i |x_i - x0|^p; zero para a medida nula."""
    if mu.n_atoms == 0:
        return 0.0
    ref = resolve_reference(x0, common_dim(mu, x0=x0))
    if p == 2:
        sq = np.sum((mu.points - ref) ** 2, axis=1)
        return float(np.dot(mu.weights, sq))
    dist = np.linalg.norm(mu.points - ref, axis=1)
    return float(np.dot(mu.weights, dist ** p))


def moment2(mu: DiscreteMeasure, x0: ReferenceLike = None) -> float:
    """Momento de segunda ordem M_{x0}(μ) = Σ w_i |x_i - x0|²."""
    return moment_p(mu, x0, 2.0)


def in_MKp(mu: DiscreteMeasure, K: float, x0: ReferenceLike = None, p: float = 2.0) -> bool:
    """Pertinência a M_{K,p}: M_{x0,p}(μ) ≤ K·m_μ."""
    if K <= 0:
        raise MeasureError(f"K deve ser positivo; recebido {K}")
    if mu.is_null:
        return True
    return moment_p(mu, x0, p) <= K * mu.mass


def in_MK(mu: DiscreteMeasure, K: float, x0: ReferenceLike = None) -> bool:
    """
    Pertinência à classe M_K: M_{x0}(μ) ≤ K·m_μ. A medida nula pertence.

    Raises:
        MeasureError: K ≤ 0
    """
    return in_MKp(mu, K, x0, 2.0)
