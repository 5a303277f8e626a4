"""
Tela de Baricentros
Subcomando `barycenter`: lê uma lista JSON de {lambda, measure_file} e
grava o baricentro WOP.
"""
import logging

from interfaces.common import command, emit, output_path, reference
from utils.barycenter import barycenter_problem, variance, wop_barycenter
from utils.config import RunConfig
from utils.measures import common_dim
from utils.storage import read_barycenter_entries, write_measure

logger = logging.getLogger(__name__)


@command
def cmd_barycenter(config: RunConfig) -> int:
    entries = read_barycenter_entries(config.inputs[0])
    x0 = reference(config, common_dim(*(mu for _, mu in entries)))
    problem = barycenter_problem(entries, x0)
    result = wop_barycenter(problem)
    if not result.converged:
        logger.warning("⚠️ Baricentro não convergiu em %d iterações; melhor iterado devolvido.",
                       result.iterations)

    summary = {
        "mass": result.measure.mass,
        "n_atoms": result.measure.n_atoms,
        "iterations": result.iterations,
        "converged": result.converged,
        "degenerate": result.degenerate,
        "variance": variance(result.measure, problem),
    }
    out = output_path(config)
    if out is not None:
        write_measure(result.measure, out)
        summary["out"] = str(out)
    else:
        summary["measure"] = result.measure
    return emit(summary)
