from .kernels import NUMBA_ENABLED
from .morphology import Joint, Link, Morphology, apply_morphology, default_biped, nominal_root_height
from .terrain import Terrain, TerrainParams, flat_terrain, generate_terrain, heightfield_window
from .world import (
    DT,
    GRAVITY,
    SUBSTEPS,
    PDGains,
    StepError,
    World,
    WorldState,
    default_gains,
    pd_torque,
)

__all__ = [
    "NUMBA_ENABLED",
    "Joint",
    "Link",
    "Morphology",
    "apply_morphology",
    "default_biped",
    "nominal_root_height",
    "Terrain",
    "TerrainParams",
    "flat_terrain",
    "generate_terrain",
    "heightfield_window",
    "DT",
    "GRAVITY",
    "SUBSTEPS",
    "PDGains",
    "StepError",
    "World",
    "WorldState",
    "default_gains",
    "pd_torque",
]
