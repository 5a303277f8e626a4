"""
Tela de Geodésicas
Subcomando `geodesic`: amostra μ_t em t = k/steps e exporta os quadros.
"""
import logging

import numpy as np

from interfaces.common import command, emit, output_path, reference
from utils.config import RunConfig
from utils.geodesy import dynamic_action, export_frames, geodesic_path, geodesic_samples, wop_p_geodesic
from utils.measures import common_dim
from utils.storage import read_measure, write_json
from utils.wop_metric import wop_distance, wop_p_distance

logger = logging.getLogger(__name__)


@command
def cmd_geodesic(config: RunConfig) -> int:
    """
    Exporta {t, mass, lambda, points, weights} por instante para `out` e
    imprime um resumo com a distância e, em p = 2, a ação discreta.
    """
    mu0, mu1 = (read_measure(path) for path in config.inputs)
    x0 = reference(config, common_dim(mu0, mu1))
    times = np.linspace(0.0, 1.0, config.steps + 1)

    if config.p == 2:
        samples = geodesic_samples(mu0, mu1, times, x0)
        distance = wop_distance(mu0, mu1, x0).distance
    else:
        samples = [wop_p_geodesic(mu0, mu1, t, x0, config.p) for t in times]
        distance = wop_p_distance(mu0, mu1, x0, config.p)

    summary = {
        "frames": len(samples),
        "p": config.p,
        "wop": distance,
        "degenerate": any(s.degenerate for s in samples),
        "masses": [s.mass for s in samples],
    }
    if config.p == 2 and not (mu0.is_null or mu1.is_null):
        action = dynamic_action(geodesic_path(mu0, mu1, config.steps, x0), x0)
        summary["action"] = action
        logger.info("Ação discreta %.6g vs WOP² %.6g", action, distance ** 2)

    out = output_path(config)
    if out is not None:
        write_json({"p": config.p, "x0": x0.tolist(), "frames": export_frames(samples)}, out)
        summary["out"] = str(out)
    return emit(summary)
