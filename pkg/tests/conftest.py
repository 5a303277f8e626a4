import numpy as np
import pytest

from utils.measures import dirac, new_measure


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def random_measure(rng):
    """Fábrica de medidas aleatórias: n átomos em R^d com massa dada."""

    def make(n=5, dim=2, mass=None, spread=2.0):
        points = rng.normal(scale=spread, size=(n, dim))
        weights = rng.uniform(0.1, 1.0, size=n)
        total = rng.uniform(0.5, 3.0) if mass is None else mass
        return new_measure(points, weights / weights.sum() * total, dim=dim)

    return make


@pytest.fixture
def dirac_pair():
    """1·δ_1 e 2·δ_2 em R^1."""
    return dirac(1.0, 1.0), dirac(2.0, 2.0)


@pytest.fixture
def write_measure_file(tmp_path):
    """Grava uma medida JSON em tmp_path e devolve o caminho como string."""
    import json

    def write(name, points, weights, dim=1):
        path = tmp_path / name
        path.write_text(json.dumps({"dim": dim, "points": points, "weights": weights}))
        return str(path)

    return write
