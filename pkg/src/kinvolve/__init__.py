"""kinvolve: third-order WENO gas-kinetic finite-volume solver on hybrid meshes."""

from .gas import GasModel, conserved_from_primitive, primitive_from_conserved
from .generator import generate_box
from .stencils import build_ghosts, select_stencils
from .topology import Mesh, parse_mesh

__version__ = "0.1.0"

__all__ = [
    "GasModel",
    "Mesh",
    "build_ghosts",
    "conserved_from_primitive",
    "generate_box",
    "parse_mesh",
    "primitive_from_conserved",
    "select_stencils",
    "__version__",
]
