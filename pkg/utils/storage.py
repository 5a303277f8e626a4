"""
Módulo de Armazenamento
Leitura e escrita de medidas (JSON/CSV), tabelas, resumos JSON
determinísticos e especificações de baricentro.
"""
import json
import logging
from io import StringIO
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from utils.errors import MeasureError
from utils.measures import DiscreteMeasure, new_measure

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# ==================== JSON ====================

def _to_builtin(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, DiscreteMeasure):
        return measure_to_dict(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Objeto não serializável: {type(obj).__name__}")


def _finite_or_null(obj: Any) -> Any:
    """Troca NaN/±inf por None em qualquer profundidade."""
    if isinstance(obj, dict):
        return {key: _finite_or_null(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_null(value) for value in obj]
    if isinstance(obj, (np.ndarray, np.generic, DiscreteMeasure, Path)):
        return _finite_or_null(_to_builtin(obj))
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps_json(obj: Any) -> str:
    """
    JSON determinístico: chaves ordenadas e floats na representação mais curta
    que reconstrói o mesmo double (no máximo 17 dígitos significativos).
    Valores não finitos (ex.: custo HK além de π/2) viram null.
    """
    return json.dumps(_finite_or_null(obj), default=_to_builtin, allow_nan=False,
                      sort_keys=True, indent=2, ensure_ascii=False)


def write_json(obj: Any, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj) + "\n", encoding="utf-8")
    logger.info("JSON gravado em %s", path)
    return path


def _float_repr(x) -> str:
    # repr de np.float64 inclui o nome do tipo no NumPy 2
    return repr(float(x))


def write_table(table: pd.DataFrame, path: PathLike) -> Path:
    """Grava uma tabela CSV com floats de ida-e-volta exata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=_float_repr)
    logger.info("Tabela gravada em %s (%d linhas)", path, len(table))
    return path


# ==================== MEDIDAS ====================

def measure_to_dict(mu: DiscreteMeasure) -> Dict[str, Any]:
    return {"dim": mu.dim, "points": mu.points.tolist(), "weights": mu.weights.tolist()}


def measure_from_dict(data: Dict[str, Any]) -> DiscreteMeasure:
    """Constrói uma medida a partir de {dim, points, weights}."""
    if not isinstance(data, dict):
        raise MeasureError("Medida JSON deve ser um objeto {dim, points, weights}.")
    dim = data.get("dim")
    try:
        dim = int(dim) if dim is not None else None
    except (TypeError, ValueError) as e:
        raise MeasureError(f"Campo dim inválido: {dim!r}") from e
    return new_measure(data.get("points", []), data.get("weights", []), dim=dim)


def read_measure(path: PathLike) -> DiscreteMeasure:
    """
    Lê uma medida de arquivo JSON ({dim, points, weights}) ou CSV (x_1..x_d, w).

    Um arquivo vazio representa a medida nula.

    Raises:
        MeasureError: Arquivo ausente ou malformado
    """
    path = Path(path)
    if not path.exists():
        raise MeasureError(f"Arquivo de medida não encontrado: {path}")
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return new_measure([], [])

    if path.suffix.lower() == ".csv":
        try:
            frame = pd.read_csv(StringIO(text), float_precision="round_trip")
        except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
            raise MeasureError(f"CSV malformado em {path}: {e}") from e
        coords = sorted((c for c in frame.columns if str(c).startswith("x_")),
                        key=lambda c: int(str(c)[2:]))
        if "w" not in frame.columns or not coords:
            raise MeasureError(f"CSV {path} deve ter colunas x_1..x_d e w.")
        return new_measure(frame[coords].to_numpy(dtype=float), frame["w"].to_numpy(dtype=float),
                           dim=len(coords))

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise MeasureError(f"JSON malformado em {path}: {e}") from e
    return measure_from_dict(data)


def write_measure(mu: DiscreteMeasure, path: PathLike) -> Path:
    """Grava uma medida em JSON ou CSV conforme a extensão."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        columns = {f"x_{k + 1}": mu.points[:, k] for k in range(mu.dim)}
        columns["w"] = mu.weights
        return write_table(pd.DataFrame(columns), path)
    return write_json(measure_to_dict(mu), path)


# ==================== ENTRADAS COMPOSTAS ====================

def read_barycenter_entries(path: PathLike) -> List[Tuple[float, DiscreteMeasure]]:
    """
    Lê uma lista JSON de {lambda, measure_file}; caminhos relativos são
    resolvidos a partir do diretório do arquivo.
    """
    path = Path(path)
    try:
        items = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise MeasureError(f"Arquivo de baricentro não encontrado: {path}") from e
    except json.JSONDecodeError as e:
        raise MeasureError(f"JSON malformado em {path}: {e}") from e
    if not isinstance(items, list) or not items:
        raise MeasureError(f"{path} deve conter uma lista não vazia de {{lambda, measure_file}}.")

    entries = []
    for k, item in enumerate(items):
        try:
            lam = float(item["lambda"])
            measure_file = Path(item["measure_file"])
        except (KeyError, TypeError, ValueError) as e:
            raise MeasureError(f"Entrada {k} de {path} inválida: {e}") from e
        if not measure_file.is_absolute():
            measure_file = path.parent / measure_file
        entries.append((lam, read_measure(measure_file)))
    return entries


def measure_to_grid(mu: DiscreteMeasure, rtol: float = 1e-9) -> Tuple[np.ndarray, float, np.ndarray]:
    """
    Converte uma medida 1-d em pontos igualmente espaçados numa grade:
    densidade = peso/dx por célula.

    Returns:
        (densidades, dx, centros das células)
    """
    if mu.dim != 1 or mu.n_atoms < 2:
        raise MeasureError("Grade exige medida 1-d com pelo menos duas células.")
    order = np.argsort(mu.points[:, 0], kind="stable")
    centers = mu.points[order, 0]
    steps = np.diff(centers)
    dx = float(steps.mean())
    if dx <= 0 or np.any(np.abs(steps - dx) > rtol * max(abs(dx), 1.0)):
        raise MeasureError("Pontos da grade devem ser igualmente espaçados.")
    return mu.weights[order] / dx, dx, centers


def grid_to_measure(densities: np.ndarray, dx: float, centers: np.ndarray,
                    dim: Optional[int] = 1) -> DiscreteMeasure:
    return new_measure(np.asarray(centers).reshape(-1, 1), np.asarray(densities) * dx, dim=dim)
