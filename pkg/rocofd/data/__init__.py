from .codec import grid_to_dict, parse_grid, serialize_grid
from .grid import BusId, GeneratorSpec, GridModel, LineSpec
from .read import read_grid_file, read_grid_files, read_grid_gcs, read_grid_local
from .schema import GridSchema
from .validate import ValidationIssue, ValidationReport, network_graph, require_valid, validate_grid

__all__ = [
    "BusId",
    "GeneratorSpec",
    "GridModel",
    "GridSchema",
    "LineSpec",
    "grid_to_dict",
    "network_graph",
    "parse_grid",
    "read_grid_file",
    "read_grid_files",
    "read_grid_gcs",
    "read_grid_local",
    "require_valid",
    "serialize_grid",
    "validate_grid",
    "ValidationIssue",
    "ValidationReport",
]
