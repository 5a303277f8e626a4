"""
Utilidades compartilhadas pelas telas da CLI: mapa de exceções para
códigos de saída, emissão do resumo JSON e resolução de x0.
"""
import functools
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np

from utils.config import RunConfig
from utils.errors import EXIT_INPUT, EXIT_OK, ConfigError, MeasureError, SolverError, WopError
from utils.measures import resolve_reference
from utils.storage import dumps_json

logger = logging.getLogger(__name__)


def command(func: Callable[[RunConfig], int]) -> Callable[[RunConfig], int]:
    """Converte exceções do motor em códigos de saída (0 ok, 2 entrada, 3 solver, 4 config)."""

    @functools.wraps(func)
    def wrapper(config: RunConfig) -> int:
        try:
            return func(config)
        except ConfigError as e:
            logger.error("❌ Configuração inválida: %s", e)
            return e.exit_code
        except SolverError as e:
            logger.error("❌ Falha do solver: %s", e)
            return e.exit_code
        except MeasureError as e:
            logger.error("❌ Entrada inválida: %s", e)
            return e.exit_code
        except WopError as e:
            logger.error("❌ Erro: %s", e)
            return e.exit_code
        except OSError as e:
            logger.error("❌ Erro de arquivo: %s", e)
            return EXIT_INPUT

    return wrapper


def emit(summary: Dict[str, Any]) -> int:
    """Escreve o resumo legível por máquina na saída-padrão."""
    sys.stdout.write(dumps_json(summary) + "\n")
    sys.stdout.flush()
    return EXIT_OK


def reference(config: RunConfig, dim: int) -> np.ndarray:
    return resolve_reference(None if config.x0 is None else np.array(config.x0), dim)


def output_path(config: RunConfig, suffix: Optional[str] = None) -> Optional[Path]:
    """Caminho de saída do RunConfig, opcionalmente com outra extensão."""
    if config.out is None:
        return None
    path = Path(config.out)
    return path.with_suffix(suffix) if suffix else path
