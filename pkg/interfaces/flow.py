"""
Tela de Fluxos Gradientes
Subcomando `flow`: fluxo em partículas para os funcionais de forma fechada
ou fluxo da entropia estendida (boltzmann) numa grade 1-d.
"""
import logging
from typing import Callable, Dict

import numpy as np
import pandas as pd

from interfaces.common import command, emit, output_path, reference
from utils.config import RunConfig
from utils.measures import ReferenceLike
from utils.storage import grid_to_measure, measure_to_grid, read_measure, write_measure, write_table
from utils.tangent import (
    Functional,
    flow_particles,
    heat_flow_grid,
    mass_moment_functional,
    normalized_moment_functional,
    scaled_moment_functional,
    total_mass_functional,
)

logger = logging.getLogger(__name__)

PARTICLE_FUNCTIONALS: Dict[str, Callable[[ReferenceLike], Functional]] = {
    "mass": lambda x0: total_mass_functional(),
    "mass-moment": mass_moment_functional,
    "scaled-moment": scaled_moment_functional,
    "normalized-moment": normalized_moment_functional,
}


def _trajectory(times: np.ndarray, masses: np.ndarray, values: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({
        "step": np.arange(len(times)),
        "t": times,
        "mass": masses,
        "F_value": values,
    })


@command
def cmd_flow(config: RunConfig) -> int:
    """
    Grava a trajetória (step, t, mass, F_value) em `out` (CSV) e a medida
    final ao lado (sufixo .final.json).
    """
    mu0 = read_measure(config.inputs[0])

    if config.functional == "boltzmann":
        rho0, dx, centers = measure_to_grid(mu0)
        path = heat_flow_grid(rho0, config.dt, config.steps, dx)
        table = _trajectory(path.times, path.masses, path.values)
        final = grid_to_measure(path.densities[-1], dx, centers)
        halted = False
    else:
        x0 = reference(config, mu0.dim)
        functional = PARTICLE_FUNCTIONALS[config.functional](x0)
        path = flow_particles(functional, mu0, x0, config.dt, config.steps)
        table = _trajectory(path.times, path.masses, path.values)
        final = path.measures[-1]
        halted = path.halted

    summary = {
        "functional": config.functional,
        "steps": int(len(table) - 1),
        "halted": halted,
        "initial_mass": float(table["mass"].iloc[0]),
        "final_mass": float(table["mass"].iloc[-1]),
        "initial_value": float(table["F_value"].iloc[0]),
        "final_value": float(table["F_value"].iloc[-1]),
    }
    out = output_path(config, ".csv")
    if out is not None:
        write_table(table, out)
        final_path = write_measure(final, out.with_suffix(".final.json"))
        summary["out"] = str(out)
        summary["final_measure"] = str(final_path)
    return emit(summary)
