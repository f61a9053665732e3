"""Hex-mesh singularity structure simplification."""

from .base_complex import extract_base_complex, extract_chords, extract_sheets, \
    extract_singularity
from .io import read_mesh, write_mesh
from .mesh import HexMesh, MeshError, build_mesh, validate
from .pipeline import SimplifyConfig, SimplifyReport, resume, run
from .ranking import RankWeights

__all__ = [
    "HexMesh", "MeshError", "RankWeights", "SimplifyConfig", "SimplifyReport", "build_mesh",
    "extract_base_complex", "extract_chords", "extract_sheets", "extract_singularity",
    "read_mesh", "resume", "run", "validate", "write_mesh",
]

__version__ = "0.1.0"
