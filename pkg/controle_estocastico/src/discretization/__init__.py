from .mesh import BoundarySample, DualMesh, Mesh, boundary_samples, build_mesh, dual_of, integrate
from .discrete_calc import (
    DualGridFunction,
    GridFunction,
    apply_Ah,
    apply_Dh,
    apply_Dh2,
)

__all__ = [
    "BoundarySample",
    "DualMesh",
    "Mesh",
    "boundary_samples",
    "build_mesh",
    "dual_of",
    "integrate",
    "DualGridFunction",
    "GridFunction",
    "apply_Ah",
    "apply_Dh",
    "apply_Dh2",
]
