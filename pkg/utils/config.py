"""
Módulo de Configuração
RunConfig da CLI: padrões documentados, arquivo TOML opcional e validação
antes do despacho.
"""
import logging
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "ezwop.toml"

# quantidades de arquivos de entrada aceitas por subcomando
SUBCOMMANDS: Dict[str, Tuple[int, ...]] = {
    "dist": (2,),
    "certify": (2,),
    "geodesic": (2,),
    "barycenter": (1,),
    "flow": (1,),
    "compare": (0, 2),
}

FUNCTIONALS = ("mass", "mass-moment", "scaled-moment", "normalized-moment", "boltzmann")

FILE_KEYS = ("x0", "p", "eps", "steps", "dt", "out", "seed", "functional")


@dataclass(frozen=True)
class RunConfig:
    """Parâmetros de uma execução da CLI."""
    subcommand: str
    inputs: Tuple[str, ...] = ()
    x0: Optional[Tuple[float, ...]] = None
    p: float = 2.0
    eps: float = 1e-3
    steps: int = 100
    dt: float = 1e-3
    out: Optional[str] = None
    seed: int = 0
    functional: str = "normalized-moment"
    config_path: Optional[str] = None
    verbose: int = 0

    def validate(self) -> "RunConfig":
        """
        Raises:
            ConfigError: Subcomando desconhecido, número de entradas ou parâmetro inválido
        """
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"Subcomando desconhecido: {self.subcommand!r}")
        allowed = SUBCOMMANDS[self.subcommand]
        if len(self.inputs) not in allowed:
            raise ConfigError(
                f"'{self.subcommand}' aceita {' ou '.join(map(str, allowed))} arquivo(s) de entrada; "
                f"recebido {len(self.inputs)}."
            )
        if self.p < 1:
            raise ConfigError(f"p deve ser ≥ 1; recebido {self.p}")
        if self.eps < 0:
            raise ConfigError(f"ε deve ser ≥ 0; recebido {self.eps}")
        if self.steps <= 0:
            raise ConfigError(f"steps deve ser positivo; recebido {self.steps}")
        if self.dt <= 0:
            raise ConfigError(f"dt deve ser positivo; recebido {self.dt}")
        if self.functional not in FUNCTIONALS:
            raise ConfigError(f"Funcional desconhecido: {self.functional!r} (opções: {', '.join(FUNCTIONALS)})")
        return self


def parse_vector(text: Any) -> Optional[Tuple[float, ...]]:
    """Converte "1,2.5" (ou lista/número) em tupla de floats."""
    if text is None:
        return None
    try:
        if isinstance(text, str):
            parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
            return tuple(float(p) for p in parts)
        if isinstance(text, (int, float)):
            return (float(text),)
        return tuple(float(v) for v in text)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Vetor inválido: {text!r}") from e


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Lê parâmetros de um arquivo TOML.

    Tenta a tabela aninhada [wop] primeiro; sem ela, usa as chaves planas
    do topo do arquivo. Sem `path`, procura ezwop.toml no diretório atual.

    Raises:
        ConfigError: Arquivo ilegível ou chave desconhecida
    """
    if path is None:
        candidate = Path(DEFAULT_CONFIG_FILE)
        if not candidate.exists():
            return {}
        path = str(candidate)

    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as e:
        raise ConfigError(f"Arquivo de configuração não encontrado: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Erro ao ler {path}: {e}") from e

    # Tenta formato aninhado primeiro
    if isinstance(data.get("wop"), dict):
        section = data["wop"]
    # Fallback para formato plano
    else:
        section = {k: v for k, v in data.items() if not isinstance(v, dict)}

    unknown = sorted(set(section) - set(FILE_KEYS))
    if unknown:
        raise ConfigError(f"Chaves desconhecidas em {path}: {', '.join(unknown)}")
    logger.debug("Configuração lida de %s: %s", path, section)
    return dict(section)


def build_config(subcommand: str, inputs: Tuple[str, ...] = (), cli: Optional[Dict[str, Any]] = None,
                 config_path: Optional[str] = None, verbose: int = 0) -> RunConfig:
    """
    Monta o RunConfig: flags da CLI > arquivo TOML > padrões.

    Valores None em `cli` significam "não informado".
    """
    merged: Dict[str, Any] = {}
    merged.update(load_config_file(config_path))
    merged.update({k: v for k, v in (cli or {}).items() if v is not None})

    valid = {f.name for f in fields(RunConfig)}
    extra = sorted(set(merged) - valid)
    if extra:
        raise ConfigError(f"Parâmetros desconhecidos: {', '.join(extra)}")

    try:
        if "x0" in merged:
            merged["x0"] = parse_vector(merged["x0"])
        for key, cast in (("p", float), ("eps", float), ("dt", float), ("steps", int), ("seed", int)):
            if key in merged:
                merged[key] = cast(merged[key])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Valor de configuração inválido: {e}") from e

    config = RunConfig(subcommand=subcommand, inputs=tuple(inputs), config_path=config_path,
                       verbose=verbose)
    return replace(config, **merged).validate()
