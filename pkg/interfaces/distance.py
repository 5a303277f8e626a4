"""
Tela de Distâncias
Subcomandos `dist` (WOP nas duas formulações, valor dual e WOP_p) e
`certify` (despejo do certificado dual).
"""
import logging

from interfaces.common import command, emit, output_path, reference
from utils.config import RunConfig
from utils.measures import common_dim
from utils.storage import read_measure, write_json
from utils.wop_metric import (
    certificate_feasibility_gap,
    dual_certificate,
    normalized_transport,
    wop_distance,
    wop_distance_defbis,
    wop_p_distance,
)

logger = logging.getLogger(__name__)


@command
def cmd_dist(config: RunConfig) -> int:
    """Imprime {wop, mass_term, transport_term, wop_defbis, dual_value, p, wop_p}."""
    mu, nu = (read_measure(path) for path in config.inputs)
    x0 = reference(config, common_dim(mu, nu))

    base = normalized_transport(mu, nu, x0)
    result = wop_distance(mu, nu, x0, transport=base)
    defbis = wop_distance_defbis(mu, nu, x0, transport=base)

    dual_value = None
    if mu.is_null or nu.is_null:
        logger.info("Medida nula na entrada: valor dual omitido.")
    else:
        dual_value = dual_certificate(mu, nu, x0, transport=base).value

    wop_p = result.distance if config.p == 2 else wop_p_distance(mu, nu, x0, config.p)
    summary = {
        "wop": result.distance,
        "mass_term": result.mass_term,
        "transport_term": result.transport_term,
        "wop_defbis": defbis.distance,
        "dual_value": dual_value,
        "p": config.p,
        "wop_p": wop_p,
        "x0": x0.tolist(),
    }
    out = output_path(config)
    if out is not None:
        write_json(summary, out)
    return emit(summary)


@command
def cmd_certify(config: RunConfig) -> int:
    """Despeja φ̃, ψ̃, o valor dual, WOP² e a maior folga de viabilidade."""
    mu, nu = (read_measure(path) for path in config.inputs)
    x0 = reference(config, common_dim(mu, nu))

    base = normalized_transport(mu, nu, x0)
    certificate = dual_certificate(mu, nu, x0, transport=base)
    gap = certificate_feasibility_gap(mu, nu, certificate, x0)
    wop_squared = wop_distance(mu, nu, x0, transport=base).distance ** 2
    if gap > 1e-8:
        logger.warning("⚠️ Certificado com violação de viabilidade %.3e", gap)

    document = {
        "phi": certificate.phi,
        "psi": certificate.psi,
        "value": certificate.value,
        "wop_squared": wop_squared,
        "feasibility_gap": gap,
        "x0": x0.tolist(),
    }
    out = output_path(config)
    if out is not None:
        write_json(document, out)
        return emit({"value": certificate.value, "wop_squared": wop_squared,
                     "feasibility_gap": gap, "out": str(out)})
    return emit(document)
