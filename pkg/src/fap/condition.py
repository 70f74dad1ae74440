"""Noun-conditioned fusion layers with hand-written forward and backward passes.

Two ways of feeding the noun context into a classifier over an image
embedding ``x``:

* Tensor Conditioning: ``tanh((W0 + W·n) x + b0 + B·n)`` where ``W`` is an
  ``A x D x N`` tensor, ``B`` an ``A x N`` matrix and ``n`` the one-hot noun.
  Contracting ``W`` with a one-hot ``n`` selects the noun's weight slice.
* Concatenation + MLP: ``[x; n]`` through one tanh hidden layer and a linear
  output layer with one unit per aspect.

All functions accept a single example (``x`` of shape ``(D,)``, ``n`` of
shape ``(N,)``) or a batch (``(B, D)`` and ``(B, N)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ndmath import Params, glorot_uniform


def one_hot(index, size: int) -> np.ndarray:
    index = np.asarray(index)
    out = np.zeros(index.shape + (size,))
    if index.ndim == 0:
        out[int(index)] = 1.0
    else:
        out[np.arange(index.size), index] = 1.0
    return out


def check_one_hot(n: np.ndarray, size: int) -> np.ndarray:
    """Return the active indices of a (batch of) one-hot vector(s), else raise."""
    n = np.asarray(n, float)
    m = np.atleast_2d(n)
    if m.shape[1] != size:
        raise ValueError(f"noun vector has length {m.shape[1]}, expected {size}")
    ok = np.all((m == 0.0) | (m == 1.0), axis=1) & (m.sum(axis=1) == 1.0)
    if not np.all(ok):
        raise ValueError("noun context must be one-hot (exactly one 1, all other entries 0)")
    return np.argmax(m, axis=1)


def _batch(x, n):
    x = np.asarray(x, float)
    n = np.asarray(n, float)
    single = x.ndim == 1
    X, Nn = np.atleast_2d(x), np.atleast_2d(n)
    if X.shape[0] != Nn.shape[0]:
        raise ValueError(f"batch sizes differ: x{x.shape} n{n.shape}")
    return X, Nn, single


@dataclass
class TensorCondParams:
    W0: np.ndarray  # (A, D)
    b0: np.ndarray  # (A,)
    W: np.ndarray  # (A, D, N)
    B: np.ndarray  # (A, N)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.W.shape

    def check(self):
        A, D, N = self.W.shape
        if self.W0.shape != (A, D) or self.b0.shape != (A,) or self.B.shape != (A, N):
            raise ValueError(f"inconsistent tensor conditioning shapes: W0{self.W0.shape} "
                             f"b0{self.b0.shape} W{self.W.shape} B{self.B.shape}")

    @classmethod
    def init(cls, A: int, D: int, N: int, rng: np.random.Generator) -> "TensorCondParams":
        return cls(W0=glorot_uniform(rng, (A, D), D, A), b0=np.zeros(A),
                   W=glorot_uniform(rng, (A, D, N), D, A), B=np.zeros((A, N)))

    @classmethod
    def zeros(cls, A: int, D: int, N: int) -> "TensorCondParams":
        return cls(np.zeros((A, D)), np.zeros(A), np.zeros((A, D, N)), np.zeros((A, N)))

    def as_dict(self) -> Params:
        return {"W0": self.W0, "b0": self.b0, "W": self.W, "B": self.B}

    @classmethod
    def from_dict(cls, d) -> "TensorCondParams":
        p = cls(np.asarray(d["W0"], float), np.asarray(d["b0"], float),
                np.asarray(d["W"], float), np.asarray(d["B"], float))
        p.check()
        return p


def tensor_condition_forward(p: TensorCondParams, x, n) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(pre, out)`` with ``out = tanh(pre)``."""
    p.check()
    A, D, N = p.W.shape
    X, Nn, single = _batch(x, n)
    if X.shape[1] != D:
        raise ValueError(f"embedding has length {X.shape[1]}, expected {D}")
    check_one_hot(Nn, N)
    # (W0 + W·n) x + b0 + B·n, contracted as a genuine tensor product
    pre = X @ p.W0.T + p.b0 + np.einsum("adn,bd,bn->ba", p.W, X, Nn, optimize=True) + Nn @ p.B.T
    out = np.tanh(pre)
    if single:
        return pre[0], out[0]
    return pre, out


def tensor_condition_backward(p: TensorCondParams, x, n, dpre, with_input: bool = False) -> Params:
    """Gradients of a loss with respect to the layer parameters, given ``dL/dpre``.

    For a batch, gradients are summed over the batch (``dpre`` carries any
    averaging). With ``with_input`` the result also holds ``"x"``.
    """
    p.check()
    A, D, N = p.W.shape
    X, Nn, single = _batch(x, n)
    G = np.atleast_2d(np.asarray(dpre, float))
    if G.shape != (X.shape[0], A) or X.shape[1] != D:
        raise ValueError(f"shape mismatch: dpre{np.shape(dpre)} x{np.shape(x)}")
    idx = check_one_hot(Nn, N)
    grads = {
        "W0": G.T @ X,
        "b0": G.sum(axis=0),
        "W": np.einsum("ba,bd,bn->adn", G, X, Nn, optimize=True),
        "B": G.T @ Nn,
    }
    if with_input:
        Wsel = p.W0[None, :, :] + np.moveaxis(p.W[:, :, idx], 2, 0)  # (B, A, D)
        dx = np.einsum("ba,bad->bd", G, Wsel)
        grads["x"] = dx[0] if single else dx
    return grads


@dataclass
class ConcatMlpParams:
    Wh: np.ndarray  # (H, D + N)
    bh: np.ndarray  # (H,)
    Wo: np.ndarray  # (A, H)
    bo: np.ndarray  # (A,)

    def check(self):
        H = self.Wh.shape[0]
        A = self.Wo.shape[0]
        if self.bh.shape != (H,) or self.Wo.shape != (A, H) or self.bo.shape != (A,):
            raise ValueError(f"inconsistent MLP shapes: Wh{self.Wh.shape} bh{self.bh.shape} "
                             f"Wo{self.Wo.shape} bo{self.bo.shape}")

    @classmethod
    def init(cls, A: int, D: int, N: int, H: int, rng: np.random.Generator) -> "ConcatMlpParams":
        return cls(Wh=glorot_uniform(rng, (H, D + N), D + N, H), bh=np.zeros(H),
                   Wo=glorot_uniform(rng, (A, H), H, A), bo=np.zeros(A))

    def as_dict(self) -> Params:
        return {"Wh": self.Wh, "bh": self.bh, "Wo": self.Wo, "bo": self.bo}

    @classmethod
    def from_dict(cls, d) -> "ConcatMlpParams":
        p = cls(*(np.asarray(d[k], float) for k in ("Wh", "bh", "Wo", "bo")))
        p.check()
        return p


def concat_mlp_forward(p: ConcatMlpParams, x, n) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(hidden, out)``; ``out`` holds raw per-aspect scores."""
    p.check()
    X, Nn, single = _batch(x, n)
    if X.shape[1] + Nn.shape[1] != p.Wh.shape[1]:
        raise ValueError(f"concatenated input has length {X.shape[1] + Nn.shape[1]}, "
                         f"expected {p.Wh.shape[1]}")
    check_one_hot(Nn, Nn.shape[1])
    Z = np.concatenate([X, Nn], axis=1)
    hidden = np.tanh(Z @ p.Wh.T + p.bh)
    out = hidden @ p.Wo.T + p.bo
    if single:
        return hidden[0], out[0]
    return hidden, out


def concat_mlp_backward(p: ConcatMlpParams, x, n, dout) -> Params:
    p.check()
    X, Nn, _ = _batch(x, n)
    G = np.atleast_2d(np.asarray(dout, float))
    if G.shape != (X.shape[0], p.Wo.shape[0]):
        raise ValueError(f"dout shape {np.shape(dout)} does not match batch/outputs")
    Z = np.concatenate([X, Nn], axis=1)
    hidden = np.tanh(Z @ p.Wh.T + p.bh)
    dhidden = G @ p.Wo
    dpre_h = dhidden * (1.0 - hidden ** 2)
    return {"Wh": dpre_h.T @ Z, "bh": dpre_h.sum(axis=0), "Wo": G.T @ hidden, "bo": G.sum(axis=0)}
