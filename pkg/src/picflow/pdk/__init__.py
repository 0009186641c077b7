from .registry import (
    CellGeometry,
    ManifestError,
    OpticalConstants,
    OutOfBandError,
    ParamOutOfRangeError,
    ParamSpec,
    PdkCell,
    PdkRegistry,
    PortSpec,
    StructuredDoc,
    default_manifest_dir,
    default_smatrix,
    instantiate_geometry,
    load_registry,
    search_cells,
)

__all__ = [
    "CellGeometry",
    "ManifestError",
    "OpticalConstants",
    "OutOfBandError",
    "ParamOutOfRangeError",
    "ParamSpec",
    "PdkCell",
    "PdkRegistry",
    "PortSpec",
    "StructuredDoc",
    "default_manifest_dir",
    "default_smatrix",
    "instantiate_geometry",
    "load_registry",
    "search_cells",
]
