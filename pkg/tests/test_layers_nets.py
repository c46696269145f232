"""GRU cell, Gaussian head, network architectures, and the input-gradient op."""

import math

import numpy as np
import pytest

from gaitlab.nn import tensor as T
from gaitlab.nn.layers import GRUCell, Linear, conv1d, gaussian_logprob
from gaitlab.nn.nets import (
    CriticNet,
    DiscriminatorEnsemble,
    NetDims,
    PolicyNet,
    input_gradient,
)
from gaitlab.nn.optim import ParamTree
from gaitlab.nn.tensor import Tensor, grad

from oracles import central_diff, rel_err


def make_gru(n_in=3, n_h=4, seed=0, zero=False):
    tree = ParamTree()
    cell = GRUCell(tree, "g", n_in, n_h, np.random.default_rng(seed))
    if zero:
        for t in tree.entries.values():
            t.data[...] = 0.0
    return tree, cell


def test_gru_zero_params_zero_state():
    _, cell = make_gru(zero=True)
    h = cell.step(Tensor(np.zeros((1, 4))), Tensor(np.zeros((1, 3))))
    assert np.array_equal(h.data, np.zeros((1, 4)))


def test_gru_grad_matches_fd():
    tree, cell = make_gru(seed=5)
    rng = np.random.default_rng(7)
    hd = rng.normal(size=(2, 4))
    xd = rng.normal(size=(2, 3))

    def f(h, x):
        return float(T.tsum(cell.step(Tensor(h), Tensor(x))).data)

    h = Tensor(hd, requires_grad=True)
    x = Tensor(xd, requires_grad=True)
    gs = grad(T.tsum(cell.step(h, x)), [h, x])
    fd = central_diff(f, [hd, xd])
    assert rel_err(gs[0].data, fd[0]) <= 1e-6
    assert rel_err(gs[1].data, fd[1]) <= 1e-6


def test_gru_param_grads_match_fd_through_unroll():
    tree, cell = make_gru(seed=2)
    rng = np.random.default_rng(3)
    seq = rng.normal(size=(2, 3, 3))
    names = tree.names()

    def f(*arrays):
        saved = [tree.entries[n].data for n in names]
        for n, a in zip(names, arrays):
            tree.entries[n].data = a
        out = float(T.tsum(cell.run(Tensor(seq))).data)
        for n, s in zip(names, saved):
            tree.entries[n].data = s
        return out

    gs = grad(T.tsum(cell.run(Tensor(seq))), [tree.entries[n] for n in names])
    fd = central_diff(f, [tree.entries[n].data for n in names])
    for g, fval in zip(gs, fd):
        assert rel_err(g.data, fval) <= 1e-6


def test_gru_bounded_when_candidate_zero():
    tree, cell = make_gru(seed=9)
    for g in ("W_c", "U_c", "b_c"):
        cell.p[g].data[...] = 0.0
    h_prev = np.array([[50.0, -80.0, 3.0, -0.1]])
    h = cell.step(Tensor(h_prev), Tensor(np.zeros((1, 3))))
    assert np.all(np.abs(h.data) <= np.abs(h_prev) + 1e-12)


def test_gaussian_logprob_standard_normal_at_zero():
    lp = gaussian_logprob(Tensor([[0.0]]), Tensor([0.0]), Tensor([[0.0]]))
    assert abs(lp.data[0] - (-0.5 * math.log(2 * math.pi))) < 1e-12
    assert abs(lp.data[0] - (-0.918938)) < 1e-6


def test_gaussian_logprob_maximal_at_mean():
    rng = np.random.default_rng(1)
    mean = Tensor(rng.normal(size=(1, 4)))
    ls = Tensor(rng.normal(size=4) * 0.3)
    lp_mode = gaussian_logprob(mean, ls, mean).data[0]
    for _ in range(20):
        a = Tensor(mean.data + rng.normal(size=(1, 4)) * 0.5)
        assert gaussian_logprob(mean, ls, a).data[0] <= lp_mode + 1e-12


def test_gaussian_logprob_doubling_std_costs_ln2_per_dim():
    d = 3
    mean = Tensor(np.zeros((1, d)))
    lp1 = gaussian_logprob(mean, Tensor(np.zeros(d)), mean).data[0]
    lp2 = gaussian_logprob(mean, Tensor(np.full(d, math.log(2.0))), mean).data[0]
    assert abs((lp1 - lp2) - d * math.log(2.0)) < 1e-12


def test_conv1d_matches_fd_and_numpy():
    rng = np.random.default_rng(4)
    xd = rng.normal(size=(2, 3, 9))
    wd = rng.normal(size=(5, 3, 3))
    bd = rng.normal(size=5)
    x = Tensor(xd, requires_grad=True)
    w = Tensor(wd, requires_grad=True)
    b = Tensor(bd, requires_grad=True)
    y = conv1d(x, w, b, stride=2)
    # direct correlation oracle
    L_out = (9 - 3) // 2 + 1
    ref = np.zeros((2, 5, L_out))
    for bi in range(2):
        for co in range(5):
            for j in range(L_out):
                ref[bi, co, j] = np.sum(xd[bi, :, 2 * j : 2 * j + 3] * wd[co]) + bd[co]
    assert np.allclose(y.data, ref, atol=1e-12)

    gs = grad(T.tsum(T.square(y)), [x, w, b])
    fd = central_diff(
        lambda a, ww, bb: float(
            T.tsum(T.square(conv1d(Tensor(a), Tensor(ww), Tensor(bb), stride=2))).data
        ),
        [xd, wd, bd],
    )
    for g, fv in zip(gs, fd):
        assert rel_err(g.data, fv) <= 1e-6


def test_policy_dims_and_determinism():
    dims = NetDims()
    pol = PolicyNet(dims, np.random.default_rng(0))
    obs = np.random.default_rng(1).normal(size=(5, dims.frames, dims.obs_frame))
    goal = np.random.default_rng(2).normal(size=(5, dims.goal))
    mean, z0 = pol.forward(Tensor(obs), Tensor(goal))
    assert z0.shape == (5, 67)
    assert mean.shape == (5, 6)
    a1, lp1, _ = pol.act(obs, goal, None)
    a2, lp2, _ = pol.act(obs, goal, None)
    assert a1.tobytes() == a2.tobytes() and lp1.tobytes() == lp2.tobytes()


def test_critic_two_heads():
    dims = NetDims()
    critic = CriticNet(dims, np.random.default_rng(0))
    v = critic.values_np(
        np.zeros((3, dims.frames, dims.obs_frame)), np.zeros((3, dims.goal))
    )
    assert v.shape == (3, 2)


def test_disc_head_independence():
    dims = NetDims(disc_input=10, disc_hidden=(16,), disc_heads=8)
    disc = DiscriminatorEnsemble(dims, np.random.default_rng(0))
    x = np.random.default_rng(1).normal(size=(4, 10))
    base = disc.scores_np(x)
    disc.heads.W.data[:, 3] += 0.5
    disc.heads.b.data[3] -= 0.25
    bumped = disc.scores_np(x)
    changed = np.any(np.abs(bumped - base) > 0, axis=0)
    assert changed[3]
    assert not np.any(changed[np.arange(8) != 3])


def test_input_gradient_linear_head_exact():
    dims = NetDims(disc_input=6, disc_hidden=(), disc_heads=3)
    disc = DiscriminatorEnsemble(dims, np.random.default_rng(0))
    x = Tensor(np.random.default_rng(1).normal(size=(2, 6)))
    g = input_gradient(disc, head=1, x=x, create_graph=False)
    w = disc.heads.W.data[:, 1]
    assert np.allclose(g.data, np.broadcast_to(w, (2, 6)), atol=1e-15)


def test_input_gradient_scalar_tanh_chain_hand_value():
    dims = NetDims(disc_input=1, disc_hidden=(1,), disc_heads=1)
    disc = DiscriminatorEnsemble(dims, np.random.default_rng(0))
    disc.trunk[0].W.data[...] = 0.7
    disc.trunk[0].b.data[...] = 0.0
    disc.heads.W.data[...] = -1.3
    disc.heads.b.data[...] = 0.0
    g = input_gradient(disc, 0, Tensor(np.zeros((1, 1))), create_graph=False)
    # tanh'(0) = 1, so the chain is just the product of the two weights
    assert abs(g.data[0, 0] - (0.7 * -1.3)) < 1e-14


def test_input_gradient_refuses_nonsmooth():
    dims = NetDims(disc_input=4, disc_hidden=(8,), disc_heads=2)
    disc = DiscriminatorEnsemble(dims, np.random.default_rng(0), activation="relu")
    with pytest.raises(ValueError, match="smooth"):
        input_gradient(disc, 0, Tensor(np.zeros((1, 4))))


def test_gradient_penalty_param_grads_match_fd():
    dims = NetDims(disc_input=3, disc_hidden=(4,), disc_heads=2)
    disc = DiscriminatorEnsemble(dims, np.random.default_rng(8))
    xd = np.random.default_rng(9).normal(size=(2, 3))
    names = disc.tree.names()

    def penalty_value(*arrays):
        saved = [disc.tree.entries[n].data for n in names]
        for n, a in zip(names, arrays):
            disc.tree.entries[n].data = a
        gx = input_gradient(disc, 0, Tensor(xd), create_graph=True)
        nrm = T.sqrt(T.tsum(T.square(gx), axis=1))
        val = float(T.tsum(T.square(nrm - 1.0)).data)
        for n, s in zip(names, saved):
            disc.tree.entries[n].data = s
        return val

    gx = input_gradient(disc, 0, Tensor(xd), create_graph=True)
    nrm = T.sqrt(T.tsum(T.square(gx), axis=1))
    pen = T.tsum(T.square(nrm - 1.0))
    gs = grad(pen, [disc.tree.entries[n] for n in names])
    fd = central_diff(penalty_value, [disc.tree.entries[n].data for n in names])
    for n, g, fv in zip(names, gs, fd):
        assert rel_err(g.data, fv) <= 1e-4, n
