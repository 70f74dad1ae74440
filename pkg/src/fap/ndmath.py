"""Dense kernels, losses, the optimizer and a finite-difference gradient checker.

Everything runs in float64. Parameters are passed around as plain dicts of
named numpy arrays so that the optimizer and the gradient checker work for
every model family without knowing its layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import expit, log_softmax
from scipy.special import softmax as _softmax

Params = dict[str, np.ndarray]


class NumericError(FloatingPointError):
    """Non-finite loss or gradient."""


def affine(W: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    W, x, b = np.asarray(W, float), np.asarray(x, float), np.asarray(b, float)
    if W.ndim != 2 or x.shape[-1] != W.shape[1] or b.shape != (W.shape[0],):
        raise ValueError(f"shape mismatch: W{W.shape} x{x.shape} b{b.shape}")
    return x @ W.T + b


def softmax(logits: np.ndarray) -> np.ndarray:
    return _softmax(np.asarray(logits, float), axis=-1)


def softmax_xent(logits: np.ndarray, label) -> tuple[float, np.ndarray]:
    """Cross-entropy of ``softmax(logits)`` against integer ``label``.

    For a 2-d batch of logits ``label`` is an integer array and the loss is the
    batch mean; the returned gradient is with respect to that mean.
    """
    logits = np.asarray(logits, float)
    single = logits.ndim == 1
    z = np.atleast_2d(logits)
    y = np.atleast_1d(np.asarray(label))
    k = z.shape[1]
    if y.shape != (z.shape[0],) or np.any(y < 0) or np.any(y >= k):
        raise ValueError(f"label {label!r} out of range for {k} classes")
    logp = log_softmax(z, axis=1)
    rows = np.arange(z.shape[0])
    loss = -logp[rows, y].mean()
    grad = np.exp(logp)
    grad[rows, y] -= 1.0
    grad /= z.shape[0]
    return float(loss), (grad[0] if single else grad)


def logistic_loss_pm1(z, y) -> tuple:
    """``log(1 + exp(-y z))`` for targets in {-1, +1}, and its derivative in ``z``.

    Element-wise; scalars in, scalars out.
    """
    z = np.asarray(z, float)
    y = np.asarray(y, float)
    if not np.all(np.abs(y) == 1):
        raise ValueError("targets must be -1 or +1")
    m = -y * z
    loss = np.logaddexp(0.0, m)
    grad = -y * expit(m)
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class OptState:
    """Optimizer hyperparameters plus per-parameter moment buffers.

    ``mode`` is ``"adam"`` (adaptive moments) or ``"sgd"`` (plain descent).
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    mode: str = "adam"
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer mode {self.mode!r}")


def optimizer_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
                   state: OptState) -> tuple[Params, OptState]:
    """One update. Returns new parameter arrays; ``state`` is advanced in place."""
    if set(params) != set(grads):
        raise ValueError(f"parameter/gradient names differ: {sorted(params)} vs {sorted(grads)}")
    for name, p in params.items():
        if np.shape(grads[name]) != np.shape(p):
            raise ValueError(f"{name}: gradient shape {np.shape(grads[name])} != {np.shape(p)}")
    state.step += 1
    out = {}
    if state.mode == "sgd":
        for name, p in params.items():
            out[name] = p - state.lr * grads[name]
        return out, state
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        out[name] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return out, state


def finite_diff_check(loss_and_grad: Callable, params, eps: float = 1e-5) -> float:
    """Max relative error between an analytic gradient and central differences.

    ``loss_and_grad(params)`` must return ``(loss, grads)`` where ``grads``
    mirrors ``params`` (a single array or a dict of arrays). The error of one
    coordinate is ``|a - n| / max(1e-8, |a| + |n|)``.
    """
    single = isinstance(params, np.ndarray)
    base = {"_": np.array(params, float)} if single else {k: np.array(v, float) for k, v in params.items()}

    def call(p):
        loss, grads = loss_and_grad(p["_"] if single else p)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss {loss!r}")
        return float(loss), ({"_": grads} if single else grads)

    _, analytic = call(base)
    worst = 0.0
    for name, arr in base.items():
        a = np.asarray(analytic[name], float)
        flat = arr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp, _ = call(base)
            flat[i] = orig - eps
            fm, _ = call(base)
            flat[i] = orig
            num = (fp - fm) / (2.0 * eps)
            ana = a.reshape(-1)[i]
            err = abs(ana - num) / max(1e-8, abs(ana) + abs(num))
            worst = max(worst, err)
    return worst
