from .policy import (
    AdaptedPolicy,
    BlendActor,
    AdapterConfig,
    Injector,
    MergedPolicy,
    TrunkAdapters,
    blend_two,
    build_adapted,
    load_adapter,
    merge,
    prune_adapted,
    prune_locked_outputs,
    verify_zero_init,
)

__all__ = [
    "AdaptedPolicy",
    "BlendActor",
    "AdapterConfig",
    "Injector",
    "MergedPolicy",
    "TrunkAdapters",
    "blend_two",
    "build_adapted",
    "load_adapter",
    "merge",
    "prune_adapted",
    "prune_locked_outputs",
    "verify_zero_init",
]
