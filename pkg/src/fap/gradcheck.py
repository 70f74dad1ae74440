"""Random instances for checking the hand-written backward passes."""

from __future__ import annotations

import numpy as np

from . import condition as cond
from .models import network_loss
from .ndmath import finite_diff_check


def random_instance(family: str, task: str, seed: int, batch: int = 4):
    """Small random parameters and data for a conditioned network.

    Returns ``(params, loss_grad)`` where ``loss_grad(params)`` gives the mean
    training loss over the batch and its gradients.
    """
    rng = np.random.default_rng(seed)
    A, D, N = int(rng.integers(2, 7)), int(rng.integers(2, 9)), int(rng.integers(2, 6))
    if family == "tensor_cond":
        params = cond.TensorCondParams.init(A, D, N, rng).as_dict()
        params["B"] = 0.3 * rng.standard_normal((A, N))
    elif family == "concat_mlp":
        params = cond.ConcatMlpParams.init(A, D, N, int(rng.integers(2, 7)), rng).as_dict()
        params["bh"] = 0.3 * rng.standard_normal(params["bh"].shape)
    else:
        raise ValueError(f"no backward pass to check for family {family!r}")
    params["b0" if family == "tensor_cond" else "bo"] = 0.3 * rng.standard_normal(A)
    X = rng.standard_normal((batch, D))
    Nn = cond.one_hot(rng.integers(N, size=batch), N)
    aspects = rng.integers(A, size=batch)
    polarity = rng.choice([-1, 1], size=batch)
    loss = network_loss(family, task, X, Nn, aspects, polarity)
    rows = np.arange(batch)
    return params, (lambda p: loss(p, rows))


def check(family: str, task: str, seed: int, eps: float = 1e-5, corrupt: bool = False) -> float:
    """Max relative finite-difference error for one random instance.

    ``corrupt`` scales the analytic gradient by 1.01, a negative control
    that must make the check fail.
    """
    params, loss_grad = random_instance(family, task, seed)
    if corrupt:
        def wrapped(p):
            loss, grads = loss_grad(p)
            return loss, {k: 1.01 * g for k, g in grads.items()}
        return finite_diff_check(wrapped, params, eps)
    return finite_diff_check(loss_grad, params, eps)
