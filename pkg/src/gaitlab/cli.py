"""Experiment driver: pretrain | adapt | eval | interp | latent | serve."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .adapt import AdaptedPolicy, BlendActor, build_adapted, load_adapter, prune_adapted
from .analysis import (
    classical_mds,
    collect_latents,
    foot_height_trace,
    save_foot_traces_csv,
    save_latents_csv,
    save_trajectory_csv,
    svg_plot,
)
from .config import ConfigError, ExperimentConfig, write_manifest
from .motion.metrics import aligned_imitation_error
from .nn.checkpoint import checkpoint_hash, load_checkpoint, save_checkpoint
from .nn.nets import CriticNet, DiscriminatorEnsemble, NetDims, PolicyNet
from .train import (
    TrainablePolicy,
    build_nets,
    evaluate,
    run_baseline,
    train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _progress(tag):
    t0 = time.time()

    def cb(it, row):
        if it % 10 == 0:
            print(f"[{tag}] iter {it:4d} goal={row.get('goal_reward', 0):.3f} "
                  f"imit={row.get('imit_reward', 0):+.3f} falls={row.get('falls', 0):.0f} "
                  f"({time.time() - t0:.0f}s)", flush=True)

    return cb


def load_base_policy(cfg: ExperimentConfig) -> PolicyNet:
    if not cfg.base_checkpoint:
        raise ConfigError("this command needs base_checkpoint in the config")
    dims = cfg.net_dims()
    net = PolicyNet(dims, np.random.default_rng(0))
    load_checkpoint(cfg.base_checkpoint, into=net.tree)
    net.tree.thaw()
    return net


def cmd_pretrain(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    spec = cfg.scenario_spec()
    tc = cfg.train_config()
    dims = cfg.net_dims()
    if cfg.baseline:
        res = run_baseline(cfg.baseline, spec, dims, tc,
                           base_checkpoint=cfg.base_checkpoint, out_dir=out,
                           reg_strength=cfg.reg_strength)
        write_manifest(cfg, out, {"samples": res.samples, "final_eval": res.final_eval})
        return EXIT_OK
    policy, critic, disc = build_nets(dims, tc.seed, with_terrain=spec.terrain_input)
    res = train(TrainablePolicy(policy), critic, disc, spec, tc, out_dir=out,
                progress=_progress("pretrain"))
    ckpt = out / "base.ckpt"
    save_checkpoint(policy.tree, ckpt, manifest={"kind": "base", "seed": tc.seed})
    write_manifest(cfg, out, {
        "samples": res.samples,
        "final_eval": res.final_eval,
        "checkpoint": str(ckpt),
    })
    print(f"[pretrain] done: {res.samples} samples, eval {res.final_eval}")
    return EXIT_OK


def cmd_adapt(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    spec = cfg.scenario_spec()
    tc = cfg.train_config()
    dims = cfg.net_dims()
    if not cfg.base_checkpoint:
        raise ConfigError("adapt needs base_checkpoint")
    acfg = cfg.adapter_config()
    adapted = build_adapted(cfg.base_checkpoint, dims, acfg, seed=tc.seed)
    locked = cfg.locked_action_indices()
    if locked:
        adapted = prune_adapted(adapted, locked)

    rng = np.random.default_rng(tc.seed + 1)
    critic = CriticNet(
        NetDims(**{**dims.__dict__, "terrain_window": acfg.terrain_window}),
        rng, with_terrain=spec.terrain_input)
    disc = DiscriminatorEnsemble(dims, np.random.default_rng(tc.seed + 2))

    def inj_norm(batch):
        obs = batch.obs.reshape((-1,) + batch.obs.shape[2:])[:256]
        goal = batch.goal.reshape(-1, batch.goal.shape[-1])[:256]
        ctrl = None
        if batch.ctrl is not None:
            ctrl = batch.ctrl.reshape(-1, batch.ctrl.shape[-1])[:256]
        return adapted.mean_injection_norm(obs, goal, ctrl)

    res = train(adapted, critic, disc, spec, tc, out_dir=out,
                inj_norm_fn=inj_norm, progress=_progress("adapt"))
    ckpt = out / "adapter.ckpt"
    adapted.save(ckpt)
    write_manifest(cfg, out, {
        "samples": res.samples,
        "final_eval": res.final_eval,
        "adapter_checkpoint": str(ckpt),
        "base_hash": adapted.base_hash,
        "mean_inj_norm_final": res.inj_norms[-1] if res.inj_norms else 0.0,
    })
    print(f"[adapt] done: eval {res.final_eval}")
    return EXIT_OK


def _actor_for(cfg: ExperimentConfig, alpha: float | None = None):
    """Base policy or adapted policy (first configured adapter) at an alpha."""
    dims = cfg.net_dims()
    if cfg.adapters:
        adapted = load_adapter(cfg.adapters[0], cfg.base_checkpoint, dims)
        locked = cfg.locked_action_indices()
        if locked:
            adapted = prune_adapted(adapted, locked)
        if alpha is not None:
            adapted.alpha = alpha
        return adapted
    base = load_base_policy(cfg)
    locked = cfg.locked_action_indices()
    if locked:
        from .adapt import prune_locked_outputs

        base = prune_locked_outputs(base, locked)
    return TrainablePolicy(base)


def cmd_eval(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.scenario_spec()
    tc = cfg.train_config()
    results = []
    alphas = cfg.alphas if cfg.adapters else [0.0]
    for alpha in alphas:
        actor = _actor_for(cfg, alpha=alpha)
        ev, frames = evaluate(actor, spec, None, seed=tc.seed, steps=tc.eval_steps,
                              record_frames=True)
        tag = f"alpha_{alpha:g}" if cfg.adapters else "base"
        save_trajectory_csv(frames, spec.morph, out / f"traj_{tag}.csv")
        traces = foot_height_trace(frames, spec.morph)
        save_foot_traces_csv(traces, out / f"feet_{tag}.csv")
        errs, _ = aligned_imitation_error(frames[:, :, :2], spec.clip)
        ev["imit_error"] = float(errs.mean())
        ev["alpha"] = alpha
        results.append(ev)
        print(f"[eval] {tag}: {ev}")
    (out / "eval.json").write_text(json.dumps(results, indent=2))
    write_manifest(cfg, out, {"results": results})
    return EXIT_OK


def cmd_interp(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.scenario_spec()
    tc = cfg.train_config()
    dims = cfg.net_dims()
    if not cfg.adapters:
        raise ConfigError("interp needs at least one adapter checkpoint")
    results = []
    if len(cfg.adapters) == 1:
        runs = [(f"alpha_{a:g}", _actor_for(cfg, alpha=a)) for a in cfg.alphas]
    else:
        a = load_adapter(cfg.adapters[0], cfg.base_checkpoint, dims)
        b = load_adapter(cfg.adapters[1], cfg.base_checkpoint, dims)
        runs = [(f"blend_{al:g}", BlendActor(a, b, al)) for al in cfg.alphas]
    for tag, actor in runs:
        ev, frames = evaluate(actor, spec, None, seed=tc.seed, steps=tc.eval_steps,
                              record_frames=True)
        save_trajectory_csv(frames, spec.morph, out / f"traj_{tag}.csv")
        errs, _ = aligned_imitation_error(frames[:, :, :2], spec.clip)
        ev["imit_error"] = float(errs.mean())
        ev["tag"] = tag
        results.append(ev)
        print(f"[interp] {tag}: {ev}")
    (out / "interp.json").write_text(json.dumps(results, indent=2))
    write_manifest(cfg, out, {"results": results})
    return EXIT_OK


def cmd_latent(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.scenario_spec()
    tc = cfg.train_config()
    dims = cfg.net_dims()
    base = load_base_policy(cfg)
    latents = collect_latents(TrainablePolicy(base), spec, "base", tc.eval_steps, tc.seed)
    for path in cfg.adapters:
        adapted = load_adapter(path, cfg.base_checkpoint, dims)
        tag = Path(path).parent.name or Path(path).stem
        latents = collect_latents(adapted, spec, tag, tc.eval_steps, tc.seed,
                                  base_policy=base, out=latents)
    save_latents_csv(latents, out / "latents.csv")
    mat, rows = latents.matrix()
    emb, stress = classical_mds(mat, out_dim=2)
    with open(out / "embedding.csv", "w") as f:
        f.write("tag,episode,t,x,y\n")
        for (tag, ep, t, _), (x, y) in zip(rows, emb):
            f.write(f"{tag},{ep},{t},{x!r},{y!r}\n")
    series = {}
    for tag in sorted(latents.tags):
        idx = [i for i, r in enumerate(rows) if r[0] == tag]
        series[tag] = (emb[idx, 0], emb[idx, 1])
    svg_plot(series, out / "embedding.svg", kind="scatter",
             title=f"latent embedding (stress {stress:.4f})")
    norms = {tag: latents.mean_norm(tag) for tag in sorted(latents.tags)}
    (out / "latent_stats.json").write_text(json.dumps(
        {"stress": stress, "mean_norms": norms}, indent=2))
    write_manifest(cfg, out, {"stress": stress})
    print(f"[latent] stress {stress:.5f}; norms {norms}")
    return EXIT_OK


def cmd_serve(cfg: ExperimentConfig) -> int:
    from .serve import run_server

    run_server(cfg)
    return EXIT_OK


COMMANDS = {
    "pretrain": cmd_pretrain,
    "adapt": cmd_adapt,
    "eval": cmd_eval,
    "interp": cmd_interp,
    "latent": cmd_latent,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gaitlab",
                                 description="planar walker adaptation lab")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--seed", type=int, default=None, help="override config seed")
    ap.add_argument("--out", default=None, help="override output directory")
    args = ap.parse_args(argv)

    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.train = {**cfg.train, "seed": args.seed}
        if args.out is not None:
            cfg.out_dir = args.out
        cfg.validate()
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
