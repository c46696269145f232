"""Named parameter storage with freeze flags, plus the Adam optimizer."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, grad as tape_grad


class ParamTree:
    """Ordered name -> Tensor map; the unit of checkpointing and freezing.

    Frozen entries keep ``requires_grad`` False so no gradient is ever
    accumulated for them, and optimizers skip them.
    """

    def __init__(self):
        self.entries: dict[str, Tensor] = {}
        self.frozen: set[str] = set()

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.entries:
            raise ValueError(f"duplicate parameter name: {name}")
        t = Tensor(np.asarray(value, dtype=np.float64), requires_grad=True)
        self.entries[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self) -> list[str]:
        return list(self.entries)

    def freeze(self, names=None) -> None:
        for n in self.entries if names is None else names:
            if n not in self.entries:
                raise KeyError(n)
            self.frozen.add(n)
            self.entries[n].requires_grad = False

    def thaw(self, names=None) -> None:
        for n in list(self.frozen) if names is None else names:
            self.frozen.discard(n)
            self.entries[n].requires_grad = True

    def trainable(self) -> dict[str, Tensor]:
        return {n: t for n, t in self.entries.items() if n not in self.frozen}

    def n_params(self, trainable_only: bool = False) -> int:
        src = self.trainable() if trainable_only else self.entries
        return int(sum(t.size for t in src.values()))

    def copy(self) -> "ParamTree":
        out = ParamTree()
        for n, t in self.entries.items():
            out.add(n, t.data.copy())
        out.freeze(sorted(self.frozen))
        return out

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {n: t.data for n, t in self.entries.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray], strict: bool = True) -> None:
        for n, a in arrays.items():
            if n not in self.entries:
                if strict:
                    raise KeyError(f"unknown parameter on load: {n}")
                continue
            t = self.entries[n]
            if t.data.shape != a.shape:
                raise ValueError(f"shape mismatch for {n}: {t.data.shape} vs {a.shape}")
            t.data = np.asarray(a, dtype=np.float64)


def global_grad_norm(grads: list[np.ndarray]) -> float:
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


class Adam:
    """Adam over a ParamTree's trainable entries; frozen tensors stay bitwise intact."""

    def __init__(self, tree: ParamTree, lr: float, betas=(0.9, 0.999), eps: float = 1e-8,
                 grad_clip: float | None = 1.0):
        self.tree = tree
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.grad_clip = grad_clip
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step_loss(self, loss: Tensor) -> dict[str, float]:
        """Backprop ``loss`` through the tape and apply one update."""
        params = self.tree.trainable()
        names = list(params)
        grads = tape_grad(loss, [params[n] for n in names])
        return self.apply(names, [g.data for g in grads])

    def apply(self, names: list[str], grads: list[np.ndarray]) -> dict[str, float]:
        gnorm = global_grad_norm(grads)
        scale = 1.0
        if self.grad_clip is not None and gnorm > self.grad_clip and gnorm > 0.0:
            scale = self.grad_clip / gnorm
        self.t += 1
        b1t = 1.0 - self.b1**self.t
        b2t = 1.0 - self.b2**self.t
        for n, g in zip(names, grads):
            if n in self.tree.frozen:
                continue
            g = g * scale
            p = self.tree.entries[n]
            m = self.m.setdefault(n, np.zeros_like(p.data))
            v = self.v.setdefault(n, np.zeros_like(p.data))
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p.data = p.data - self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
        return {"grad_norm": gnorm, "clip_scale": scale}
