"""
Tela de Comparação WOP × HK
Subcomando `compare`: perfis de massa ao longo das geodésicas WOP e HK.
Sem arquivos de entrada, usa um par gaussiano discretizado gerado pela semente.
"""
import logging
from typing import Tuple

import numpy as np

from interfaces.common import command, emit, output_path
from utils.config import RunConfig
from utils.measures import DiscreteMeasure, new_measure
from utils.storage import read_measure, write_json, write_table
from utils.uot_compare import compare_geodesic_masses

logger = logging.getLogger(__name__)

GAUSSIAN_ATOMS = 500
GAUSSIAN_MEANS = (-0.5, 0.5)
GAUSSIAN_STD = 0.2
GAUSSIAN_MASSES = (1.0, 2.0)


def gaussian_pair(seed: int, n_atoms: int = GAUSSIAN_ATOMS) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """Duas gaussianas 1-d amostradas com pesos uniformes e massas 1 e 2."""
    rng = np.random.default_rng(seed)
    pair = []
    for mean, mass in zip(GAUSSIAN_MEANS, GAUSSIAN_MASSES):
        points = rng.normal(mean, GAUSSIAN_STD, size=(n_atoms, 1))
        pair.append(new_measure(points, np.full(n_atoms, mass / n_atoms), dim=1))
    return pair[0], pair[1]


@command
def cmd_compare(config: RunConfig) -> int:
    """
    Grava a tabela (t, mass_wop, mass_hk) em `out` (CSV) e os metadados do
    solver ao lado (.json); imprime os metadados e o desvio do perfil HK
    em relação à reta.
    """
    if config.inputs:
        mu, nu = (read_measure(path) for path in config.inputs)
    else:
        mu, nu = gaussian_pair(config.seed)
        logger.info("Par gaussiano gerado com semente %d", config.seed)

    table, metadata = compare_geodesic_masses(mu, nu, config.steps, config.eps)
    t = table["t"].to_numpy()
    chord = (1.0 - t) * table["mass_hk"].iloc[0] + t * table["mass_hk"].iloc[-1]
    metadata["hk_nonlinearity"] = float(np.max(np.abs(table["mass_hk"].to_numpy() - chord)))
    metadata["wop_nonlinearity"] = float(np.max(np.abs(
        table["mass_wop"].to_numpy() - ((1.0 - t) * mu.mass + t * nu.mass)
    )))
    metadata["seed"] = config.seed

    summary = dict(metadata)
    out = output_path(config, ".csv")
    if out is not None:
        write_table(table, out)
        write_json(metadata, out.with_suffix(".json"))
        summary["out"] = str(out)
    return emit(summary)
