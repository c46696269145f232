from .clips import (
    FRAME_RATE,
    GaitParams,
    ReferenceClip,
    STYLE_PRESETS,
    fk_pose,
    generate_clip,
    joint_targets,
    load_clip_csv,
    save_clip_csv,
)
from .metrics import aligned_imitation_error, imitation_error
from .observe import (
    DISC_FRAMES,
    HISTORY,
    FeatureMap,
    GoalState,
    clip_disc_window,
    clip_windows_dataset,
    disc_window_dim,
    obs_dim,
    obs_frame_dim,
    observe,
    sim_disc_window,
)

__all__ = [
    "FRAME_RATE",
    "GaitParams",
    "ReferenceClip",
    "STYLE_PRESETS",
    "fk_pose",
    "generate_clip",
    "joint_targets",
    "load_clip_csv",
    "save_clip_csv",
    "aligned_imitation_error",
    "imitation_error",
    "DISC_FRAMES",
    "HISTORY",
    "FeatureMap",
    "GoalState",
    "clip_disc_window",
    "clip_windows_dataset",
    "disc_window_dim",
    "obs_dim",
    "obs_frame_dim",
    "observe",
    "sim_disc_window",
]
