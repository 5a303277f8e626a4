"""
EzWOP - Distância WOP entre medidas positivas finitas
Aplicação principal: parse dos argumentos, configuração e navegação entre
os subcomandos.
"""
import argparse
import logging
import sys
from typing import List, Optional

from utils.config import FUNCTIONALS, SUBCOMMANDS, RunConfig, build_config
from utils.errors import EXIT_CONFIG, ConfigError

logger = logging.getLogger("ezwop")

DESCRIPTIONS = {
    "dist": "Distância WOP (duas formulações), valor dual e WOP_p entre duas medidas",
    "certify": "Certificado dual (φ̃, ψ̃) para WOP² entre duas medidas",
    "geodesic": "Quadros da geodésica WOP entre duas medidas",
    "barycenter": "Baricentro WOP a partir de uma lista JSON de {lambda, measure_file}",
    "flow": "Fluxo gradiente WOP de um funcional a partir de uma medida",
    "compare": "Perfis de massa das geodésicas WOP e HK",
}


def build_parser() -> argparse.ArgumentParser:
    """Parser com as flags globais repetidas em cada subcomando."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--x0", help="Ponto de referência, ex.: '0' ou '1,2.5' (padrão: origem)")
    common.add_argument("--p", type=float, help="Expoente p ≥ 1 (padrão: 2)")
    common.add_argument("--eps", type=float, help="Regularização entrópica ε (padrão: 1e-3)")
    common.add_argument("--steps", type=int, help="Número de passos de tempo (padrão: 100)")
    common.add_argument("--dt", type=float, help="Passo de tempo dos fluxos (padrão: 1e-3)")
    common.add_argument("--out", help="Caminho de saída")
    common.add_argument("--seed", type=int, help="Semente (padrão: 0)")
    common.add_argument("--functional", choices=FUNCTIONALS, help="Funcional do fluxo (padrão: normalized-moment)")
    common.add_argument("--config", help="Arquivo TOML de configuração (padrão: ./ezwop.toml se existir)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_const", const=1, default=0, dest="verbose")
    verbosity.add_argument("-q", "--quiet", action="store_const", const=-1, dest="verbose")

    parser = argparse.ArgumentParser(prog="ezwop", description="📊 EzWOP - métrica WOP para medidas positivas")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, parents=[common], help=DESCRIPTIONS[name],
                                    description=DESCRIPTIONS[name])
        sub.add_argument("inputs", nargs="*", help="Arquivos de medida (JSON ou CSV)")
    return parser


def configure_logging(verbose: int) -> None:
    level = {1: logging.DEBUG, 0: logging.INFO, -1: logging.WARNING}[verbose]
    logging.basicConfig(stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def dispatch(config: RunConfig) -> int:
    """Despacha para a tela do subcomando."""

    if config.subcommand == "dist":
        from interfaces import distance
        return distance.cmd_dist(config)

    elif config.subcommand == "certify":
        from interfaces import distance
        return distance.cmd_certify(config)

    elif config.subcommand == "geodesic":
        from interfaces import geodesic
        return geodesic.cmd_geodesic(config)

    elif config.subcommand == "barycenter":
        from interfaces import barycenter
        return barycenter.cmd_barycenter(config)

    elif config.subcommand == "flow":
        from interfaces import flow
        return flow.cmd_flow(config)

    elif config.subcommand == "compare":
        from interfaces import compare
        return compare.cmd_compare(config)

    logger.error("❌ Subcomando desconhecido: %s", config.subcommand)
    return EXIT_CONFIG


def main(argv: Optional[List[str]] = None) -> int:
    """Função principal da aplicação; devolve o código de saída."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    cli = {key: getattr(args, key) for key in ("x0", "p", "eps", "steps", "dt", "out", "seed", "functional")}
    try:
        config = build_config(args.subcommand, tuple(args.inputs), cli, args.config, args.verbose)
    except ConfigError as e:
        logger.error("❌ Configuração inválida: %s", e)
        return e.exit_code

    logger.debug("Configuração: %s", config)
    return dispatch(config)


if __name__ == "__main__":
    sys.exit(main())
