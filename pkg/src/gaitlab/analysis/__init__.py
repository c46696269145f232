from .latents import LatentSet, collect_latents, save_latents_csv
from .mds import classical_mds, jacobi_eigh, pairwise_distances
from .svg import svg_plot
from .traces import (
    foot_height_trace,
    load_trajectory_csv,
    save_foot_traces_csv,
    save_trajectory_csv,
)

__all__ = [
    "LatentSet",
    "collect_latents",
    "save_latents_csv",
    "classical_mds",
    "jacobi_eigh",
    "pairwise_distances",
    "svg_plot",
    "foot_height_trace",
    "load_trajectory_csv",
    "save_foot_traces_csv",
    "save_trajectory_csv",
]
