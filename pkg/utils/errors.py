"""
Módulo de Erros
Hierarquia de exceções do EzWOP e mapa de códigos de saída da CLI.
"""
from typing import Optional


class WopError(Exception):
    """Erro base de todas as operações do EzWOP."""

    exit_code = 1


class MeasureError(WopError, ValueError):
    """Entrada inválida: medida malformada, dimensão incompatível, arquivo ilegível."""

    exit_code = 2


class PathConsistencyError(MeasureError):
    """Caminho cujos átomos/massa não seguem as velocidades declaradas."""


class SolverError(WopError, RuntimeError):
    """Falha numérica ou não-convergência de um solver."""

    exit_code = 3

    def __init__(self, message: str, iterations: Optional[int] = None,
                 residual: Optional[float] = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual

    def __str__(self) -> str:
        base = super().__str__()
        extras = []
        if self.iterations is not None:
            extras.append(f"iterações={self.iterations}")
        if self.residual is not None:
            extras.append(f"resíduo={self.residual:.3e}")
        return f"{base} ({', '.join(extras)})" if extras else base


class ConfigError(WopError, ValueError):
    """Configuração inválida (flags, arquivo TOML ou parâmetros numéricos)."""

    exit_code = 4


EXIT_OK = 0
EXIT_INPUT = MeasureError.exit_code
EXIT_SOLVER = SolverError.exit_code
EXIT_CONFIG = ConfigError.exit_code
