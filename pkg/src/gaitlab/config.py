"""Experiment configuration: JSON schema, validation, scenario construction.

Defaults equal the published training hyperparameters where one exists (see
README for the annotated table); desk-scale presets in configs/ override the
ones that only make sense at cluster scale (worker count, learning rates).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .adapt.policy import AdapterConfig
from .motion.clips import GaitParams, STYLE_PRESETS, generate_clip
from .nn.nets import NetDims
from .sim.morphology import apply_morphology, default_biped
from .sim.terrain import TerrainParams
from .train.loop import TrainConfig
from .train.rollout import ScenarioSpec


class ConfigError(ValueError):
    pass


MORPH_PRESETS = {
    "longshins": [{"scale": {"links": ["l_shin", "r_shin"], "factor": 1.5}}],
    "longthighs": [{"scale": {"links": ["l_thigh", "r_thigh"], "factor": 1.5}}],
    "superlonglegs": [
        {"scale": {"links": ["l_thigh", "r_thigh", "l_shin", "r_shin"], "factor": 1.5}}
    ],
    "bigtorso": [{"scale": {"links": ["torso"], "factor": 1.5}}],
    "lock_knees": [{"lock": ["l_knee", "r_knee"]}],
    "lock_ankles": [{"lock": ["l_ankle", "r_ankle"]}],
    "lock_right_knee": [{"lock": ["r_knee"]}],
}

TERRAIN_PRESETS = {
    "gentle": TerrainParams(noise_amplitude=0.6, noise_octaves=2, h_max=0.25),
    "rough": TerrainParams(noise_amplitude=1.0, uniform_amplitude=0.15, h_max=0.4),
    "blocks": TerrainParams(noise_amplitude=0.4, n_blocks=14, block_height=0.2, h_max=0.35),
}


def _from_dict(cls, data: dict, where: str):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**data)


@dataclass
class ExperimentConfig:
    scenario: str = "pretrain"
    seed: int = 0
    out_dir: str = "runs/out"
    base_checkpoint: str | None = None
    morphology_edits: list = field(default_factory=list)  # explicit edit list
    network: dict = field(default_factory=dict)           # NetDims overrides
    train: dict = field(default_factory=dict)             # TrainConfig overrides
    adapter: dict = field(default_factory=dict)           # AdapterConfig overrides
    baseline: str | None = None                           # scratch | ft | ft_reg
    reg_strength: float = 0.01
    alphas: list = field(default_factory=lambda: [0.0, 0.5, 1.0])
    adapters: list = field(default_factory=list)          # adapter ckpt paths (eval/serve)
    port: int = 8765

    SCENARIOS = ("pretrain", "style", "morphology", "friction", "terrain", "perturb")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        cfg = _from_dict(cls, data, "config")
        cfg.validate()
        return cfg

    def validate(self) -> None:
        kind = self.scenario.split(":", 1)[0]
        if kind not in self.SCENARIOS:
            raise ConfigError(f"unknown scenario: {self.scenario!r}")
        if kind == "style":
            preset = self.scenario.split(":", 1)[1]
            if preset not in STYLE_PRESETS:
                raise ConfigError(f"unknown style preset: {preset!r} "
                                  f"(have {sorted(STYLE_PRESETS)})")
        if kind == "morphology":
            preset = self.scenario.split(":", 1)[1]
            if preset not in MORPH_PRESETS and preset != "custom":
                raise ConfigError(f"unknown morphology preset: {preset!r}")
        if kind == "terrain":
            preset = self.scenario.split(":", 1)[1]
            if preset not in TERRAIN_PRESETS:
                raise ConfigError(f"unknown terrain preset: {preset!r}")
        # reject unknown nested keys and bad weights before any compute
        self.train_config()
        self.net_dims()
        self.adapter_config()
        if self.baseline is not None and self.baseline not in ("scratch", "ft", "ft_reg"):
            raise ConfigError(f"unknown baseline: {self.baseline!r}")

    # -- derived objects ---------------------------------------------------------

    def train_config(self) -> TrainConfig:
        data = dict(self.train)
        data.setdefault("seed", self.seed)
        cfg = _from_dict(TrainConfig, data, "train")
        if abs(sum(cfg.omega.values()) - 1.0) > 1e-9:
            raise ConfigError(f"objective weights must sum to 1: {cfg.omega}")
        kind = self.scenario.split(":", 1)[0]
        if "omega" not in data and kind == "style":
            cfg.omega = {"imitation": 0.35, "goal": 0.65}
        return cfg

    def net_dims(self) -> NetDims:
        dims = _from_dict(NetDims, dict(self.network), "network")
        if "trunk" in self.network:
            dims.trunk = tuple(self.network["trunk"])
        if "disc_hidden" in self.network:
            dims.disc_hidden = tuple(self.network["disc_hidden"])
        return dims

    def adapter_config(self) -> AdapterConfig:
        data = dict(self.adapter)
        if "sites" in data:
            data["sites"] = tuple(data["sites"])
        cfg = _from_dict(AdapterConfig, data, "adapter")
        kind = self.scenario.split(":", 1)[0]
        if kind == "terrain" and "with_terrain" not in data:
            cfg.with_terrain = True
        tc = self.train_config()
        if "beta_inj" not in data:
            cfg.beta_inj = tc.beta_inj
        if "kappa_eta" not in data:
            cfg.kappa_eta = tc.kappa_eta
        return cfg

    def scenario_spec(self) -> ScenarioSpec:
        base = default_biped()
        kind, _, arg = self.scenario.partition(":")
        morph = base
        friction = 1.0
        terrain_params = None
        terrain_input = False
        perturb_force = 0.0
        style = "walk"
        headings: tuple = (1.0, -1.0)

        edits = list(self.morphology_edits)
        if kind == "morphology":
            if arg != "custom":
                edits = MORPH_PRESETS[arg] + edits
        if edits:
            morph = apply_morphology(base, edits)
            if _asymmetric(edits):
                headings = (1.0,)
        if kind == "style":
            style = arg
        elif kind == "friction":
            try:
                friction = float(arg)
            except ValueError:
                raise ConfigError(f"friction scenario needs a number, got {arg!r}") from None
        elif kind == "terrain":
            terrain_params = TERRAIN_PRESETS[arg]
            terrain_input = True
        elif kind == "perturb":
            try:
                perturb_force = float(arg) if arg else 150.0
            except ValueError:
                raise ConfigError(f"perturb scenario needs a number, got {arg!r}") from None

        clip = generate_clip(STYLE_PRESETS[style], base, style)
        ad = self.adapter_config()
        return ScenarioSpec(
            morph=morph,
            clip=clip,
            friction=friction,
            terrain_params=terrain_params,
            terrain_input=terrain_input and ad.with_terrain,
            terrain_window=ad.terrain_window,
            perturb_force=perturb_force,
            headings=headings,
        )

    def locked_action_indices(self) -> list[int]:
        """Indices (in the base actuated ordering) of joints locked by edits."""
        base = default_biped()
        spec_morph = self.scenario_spec().morph
        base_names = base.actuated_names()
        live = set(spec_morph.actuated_names())
        return [i for i, n in enumerate(base_names) if n not in live]

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _asymmetric(edits: list) -> bool:
    """Left/right mirror symmetry check over the edit list."""
    def flip(name):
        if name.startswith("l_"):
            return "r_" + name[2:]
        if name.startswith("r_"):
            return "l_" + name[2:]
        return name

    for e in edits:
        if "scale" in e:
            names = set(e["scale"]["links"])
        else:
            names = set(e["lock"])
        if {flip(n) for n in names} != names:
            return True
    return False


def write_manifest(cfg: ExperimentConfig, out_dir, extra: dict | None = None) -> Path:
    from . import __version__

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": asdict(cfg),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "code_version": __version__,
    }
    manifest.update(extra or {})
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    return path
