import sys
from pathlib import Path

import numpy as np
import pytest

# Adiciona o diretório do projeto ao path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.discretization.mesh import build_mesh
from src.stochastic.coefficients import build_coefficients
from src.stochastic.forward_solver import region_mask
from src.stochastic.noise_tree import build_tree


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_setup(rng):
    """Malha N=4, árvore m=4 com coeficientes adaptados aleatórios."""
    mesh = build_mesh(4)
    tree = build_tree(4, 1.0)
    coeffs = build_coefficients("adapted-random", (0.5, 0.5), mesh, tree, rng)
    return mesh, tree, coeffs, region_mask(mesh, (0.3, 0.7))
