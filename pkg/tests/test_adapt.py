"""Adapted-policy construction: identity at init, blending, merging, pruning."""

import numpy as np
import pytest

from gaitlab.adapt import (
    AdaptedPolicy,
    AdapterConfig,
    blend_two,
    build_adapted,
    load_adapter,
    merge,
    prune_adapted,
    prune_locked_outputs,
)
from gaitlab.nn.checkpoint import save_checkpoint
from gaitlab.nn.nets import NetDims, PolicyNet
from gaitlab.nn.optim import Adam
from gaitlab.nn.tensor import Tensor, tsum, square

DIMS = NetDims(gru_hidden=16, trunk=(24, 24), obs_frame=12, frames=4, action=4,
               disc_input=20, disc_hidden=(16,), disc_heads=4)


@pytest.fixture()
def base_ckpt(tmp_path):
    net = PolicyNet(DIMS, np.random.default_rng(0))
    p = tmp_path / "base.ckpt"
    save_checkpoint(net.tree, p)
    return p


def rand_inputs(n, rng=None, terrain=False):
    rng = rng or np.random.default_rng(3)
    obs = rng.normal(size=(n, DIMS.frames, DIMS.obs_frame))
    goal = rng.normal(size=(n, DIMS.goal))
    ctrl = rng.normal(size=(n, 32)) if terrain else None
    return obs, goal, ctrl


def train_a_little(adapted, seed=0, steps=25):
    """Nudge adapter parameters with a synthetic regression objective."""
    rng = np.random.default_rng(seed)
    opt = Adam(adapted.atree, lr=3e-3)
    obs, goal, ctrl = rand_inputs(16, rng, terrain=adapted.cfg.with_terrain)
    target = rng.normal(size=(16, DIMS.action))
    for _ in range(steps):
        mean, _, _ = adapted.forward(
            Tensor(obs), Tensor(goal), None if ctrl is None else Tensor(ctrl)
        )
        loss = tsum(square(mean - Tensor(target)))
        opt.step_loss(loss)
    return adapted


@pytest.mark.parametrize("sites", [(0,), (1,), (2,), (0, 1, 2)])
@pytest.mark.parametrize("kind", ["full", "lora", "none"])
def test_identity_at_init_all_variants(base_ckpt, sites, kind):
    cfg = AdapterConfig(sites=sites, kind=kind, rank=2)
    adapted = build_adapted(base_ckpt, DIMS, cfg, seed=1)
    obs, goal, _ = rand_inputs(32)
    base_mean, _ = adapted.base.forward(Tensor(obs), Tensor(goal))
    for alpha in (0.0, 0.5, 1.0):
        mean, _, inj = adapted.forward(Tensor(obs), Tensor(goal), alpha=alpha)
        assert np.array_equal(mean.data, base_mean.data)
    assert np.allclose(inj.data, 0.0, atol=1e-6)


def test_alpha_out_of_range_rejected(base_ckpt):
    adapted = build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=1)
    obs, goal, _ = rand_inputs(2)
    with pytest.raises(ValueError, match="alpha"):
        adapted.forward(Tensor(obs), Tensor(goal), alpha=1.5)


def test_head_adapter_rejected(base_ckpt):
    with pytest.raises(ValueError, match="action head"):
        build_adapted(base_ckpt, DIMS, AdapterConfig(adapt_head=True))


def test_terrain_input_contract(base_ckpt):
    cfg = AdapterConfig(with_terrain=True, terrain_window=32)
    adapted = build_adapted(base_ckpt, DIMS, cfg, seed=2)
    obs, goal, ctrl = rand_inputs(4, terrain=True)
    mean, _, _ = adapted.forward(Tensor(obs), Tensor(goal), Tensor(ctrl))
    assert mean.shape == (4, DIMS.action)
    with pytest.raises(ValueError, match="control input"):
        adapted.forward(Tensor(obs), Tensor(goal), None)


def test_lora_param_count_and_rank(base_ckpt):
    cfg = AdapterConfig(kind="lora", rank=2)
    adapted = build_adapted(base_ckpt, DIMS, cfg, seed=1)
    train_a_little(adapted, steps=30)
    for i, layer in enumerate(adapted.adapters.layers):
        n_in = DIMS.latent if i == 0 else DIMS.trunk[i - 1]
        n_out = DIMS.trunk[i]
        n_params = layer["B"].size + layer["A"].size + layer["db"].size
        assert n_params == n_in * 2 + 2 * n_out + n_out
        dw = layer["B"].data @ layer["A"].data
        rank = np.sum(np.linalg.svd(dw, compute_uv=False) > 1e-8)
        assert rank <= 2


def test_injection_linear_in_alpha(base_ckpt):
    adapted = train_a_little(build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=1))
    obs, goal, _ = rand_inputs(8)

    def z0(alpha):
        _, _, _ = adapted.forward(Tensor(obs), Tensor(goal), alpha=alpha)
        offs = adapted.injector.offsets(Tensor(obs), Tensor(goal), None)
        return adapted.base.encode(Tensor(obs), Tensor(goal)).data + alpha * offs[0].data

    z_half = z0(0.5)
    assert np.max(np.abs(z_half - 0.5 * (z0(0.0) + z0(1.0)))) <= 1e-9


def test_blend_endpoints(base_ckpt):
    a = train_a_little(build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=1), seed=10)
    b = train_a_little(build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=2), seed=20)
    obs, goal, _ = rand_inputs(8)
    o, g = Tensor(obs), Tensor(goal)

    blend_1, _, _ = blend_two(a, b, 1.0, o, g)
    only_a, _, _ = a.forward(o, g, alpha=1.0)
    assert np.allclose(blend_1.data, only_a.data, atol=1e-12)

    blend_0, _, _ = blend_two(a, b, 0.0, o, g)
    only_b, _, _ = b.forward(o, g, alpha=1.0)
    assert np.allclose(blend_0.data, only_b.data, atol=1e-12)

    same, _, _ = blend_two(a, a, 0.3, o, g)
    same2, _, _ = blend_two(a, a, 0.9, o, g)
    assert np.allclose(same.data, same2.data, atol=1e-12)


def test_blend_mismatched_bases_rejected(base_ckpt, tmp_path):
    other_net = PolicyNet(DIMS, np.random.default_rng(9))
    other_path = tmp_path / "other.ckpt"
    save_checkpoint(other_net.tree, other_path)
    a = build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=1)
    b = build_adapted(other_path, DIMS, AdapterConfig(), seed=2)
    obs, goal, _ = rand_inputs(2)
    with pytest.raises(ValueError, match="same base"):
        blend_two(a, b, 0.5, Tensor(obs), Tensor(goal))


@pytest.mark.parametrize("kind", ["full", "lora"])
def test_merge_matches_unmerged(base_ckpt, kind):
    cfg = AdapterConfig(kind=kind, rank=3)
    adapted = train_a_little(build_adapted(base_ckpt, DIMS, cfg, seed=1), steps=40)
    obs, goal, _ = rand_inputs(100)
    merged = merge(adapted, alpha=1.0)
    m1, _, _ = adapted.forward(Tensor(obs), Tensor(goal), alpha=1.0)
    m2 = merged.forward(Tensor(obs), Tensor(goal))
    denom = max(1.0, np.max(np.abs(m1.data)))
    assert np.max(np.abs(m1.data - m2.data)) / denom <= 1e-6


def test_merge_alpha_zero_is_base_bitwise(base_ckpt):
    adapted = train_a_little(build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=1))
    merged = merge(adapted, alpha=0.0)
    for i, layer in enumerate(adapted.base.trunk):
        assert merged.net.trunk[i].W.data.tobytes() == layer.W.data.tobytes()


def test_merge_scalar_example():
    # W=[[2]], dW=[[0.5]], alpha=1 -> 2.5
    w = np.array([[2.0]])
    dw = np.array([[0.5]])
    assert (w + 1.0 * dw)[0, 0] == 2.5


def test_regularizer_values(base_ckpt):
    cfg = AdapterConfig(beta_inj=0.01, kappa_eta=0.0)
    adapted = build_adapted(base_ckpt, DIMS, cfg, seed=1)
    obs, goal, _ = rand_inputs(6)
    assert adapted.regularizer_value(obs, goal) == pytest.approx(0.0, abs=1e-6)

    # plant a fixed injection of (3, 4, 0, ...) via the final bias
    final = adapted.injector.heads[0][1]
    final.b.data[0] = 3.0
    final.b.data[1] = 4.0
    val = adapted.regularizer_value(obs, goal)
    assert val == pytest.approx(0.01 * 5.0, rel=1e-6)

    cfg0 = AdapterConfig(beta_inj=0.0, kappa_eta=0.0)
    a2 = build_adapted(base_ckpt, DIMS, cfg0, seed=1)
    a2.injector.heads[0][1].b.data[0] = 100.0
    assert a2.regularizer_value(obs, goal) == pytest.approx(0.0, abs=1e-9)


def test_prune_locked_outputs(base_ckpt):
    net = PolicyNet(DIMS, np.random.default_rng(4))
    obs, goal, _ = rand_inputs(5)
    full_mean, _ = net.forward(Tensor(obs), Tensor(goal))
    pruned = prune_locked_outputs(net, [1, 2])
    kept = [0, 3]
    mean, _ = pruned.forward(Tensor(obs), Tensor(goal))
    assert mean.shape == (5, 2)
    # column removal keeps outputs mathematically identical; BLAS kernel choice
    # for the smaller matmul can flip the last ulp
    assert np.max(np.abs(mean.data - full_mean.data[:, kept])) <= 1e-14
    assert np.array_equal(pruned.log_std.data, net.log_std.data[kept])

    same = prune_locked_outputs(net, [])
    m_same, _ = same.forward(Tensor(obs), Tensor(goal))
    assert np.array_equal(m_same.data, full_mean.data)

    with pytest.raises(ValueError, match="every action"):
        prune_locked_outputs(net, [0, 1, 2, 3])


def test_prune_merge_commute(base_ckpt):
    adapted = train_a_little(build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=1))
    obs, goal, _ = rand_inputs(7)
    o, g = Tensor(obs), Tensor(goal)
    locked = [0, 3]

    m = merge(adapted, 1.0)
    m.net = prune_locked_outputs(m.net, locked)
    out1 = m.forward(o, g)

    p = prune_adapted(adapted, locked)
    m2 = merge(p, 1.0)
    out2 = m2.forward(o, g)
    assert np.max(np.abs(out1.data - out2.data)) <= 1e-9


def test_adapter_checkpoint_roundtrip(base_ckpt, tmp_path):
    cfg = AdapterConfig(kind="full", sites=(0, 1))
    adapted = train_a_little(build_adapted(base_ckpt, DIMS, cfg, seed=1))
    path = tmp_path / "adapter.ckpt"
    adapted.save(path)
    loaded = load_adapter(path, base_ckpt, DIMS)
    obs, goal, _ = rand_inputs(4)
    m1, _, _ = adapted.forward(Tensor(obs), Tensor(goal))
    m2, _, _ = loaded.forward(Tensor(obs), Tensor(goal))
    assert np.max(np.abs(m1.data - m2.data)) <= 1e-6  # f32 storage rounding

    other = PolicyNet(DIMS, np.random.default_rng(77))
    other_path = tmp_path / "other_base.ckpt"
    save_checkpoint(other.tree, other_path)
    with pytest.raises(ValueError, match="different base"):
        load_adapter(path, other_path, DIMS)


def test_trainable_param_count_same_scale(base_ckpt):
    # the encoder clone + embedding stack + full-rank branches land a few
    # percent above the base parameter count (never the 2x of running a
    # second network); the embedding stack alone always outweighs the head
    adapted = build_adapted(base_ckpt, DIMS, AdapterConfig(kind="full"), seed=1)
    n_base = adapted.base.tree.n_params()
    n_adapt = adapted.atree.n_params(trainable_only=True)
    assert n_adapt <= 1.3 * n_base

    lora = build_adapted(base_ckpt, DIMS, AdapterConfig(kind="lora", rank=2), seed=1)
    assert lora.atree.n_params(trainable_only=True) < n_adapt


def test_freeze_base_under_adapter_training(base_ckpt):
    adapted = build_adapted(base_ckpt, DIMS, AdapterConfig(), seed=1)
    before = {n: t.data.tobytes() for n, t in adapted.base.tree.entries.items()}
    train_a_little(adapted, steps=30)
    for n, t in adapted.base.tree.entries.items():
        assert t.data.tobytes() == before[n], n
