"""The Tensor Conditioning layer on a toy example.

Contracting the weight tensor with a one-hot noun picks one slice, so the
layer behaves like a separate linear map per noun that shares W0 and b0.
"""

import numpy as np

from fap.condition import TensorCondParams, one_hot, tensor_condition_backward, tensor_condition_forward
from fap.ndmath import finite_diff_check

# one aspect unit, a 2-d embedding, two nouns
W = np.zeros((1, 2, 2))
W[0, :, 0] = [0, 1]
W[0, :, 1] = [-1, 0]
p = TensorCondParams(W0=np.array([[1.0, 0.0]]), b0=np.zeros(1), W=W, B=np.array([[0.5, -0.5]]))
x = np.array([1.0, 2.0])

for k in range(2):
    pre, out = tensor_condition_forward(p, x, one_hot(k, 2))
    print(f"noun {k}: pre={pre[0]:+.2f} out={out[0]:+.4f}")
# noun 0: (1 + 2) + 0.5 = 3.5; noun 1: (1 - 1) - 0.5 = -0.5

# same thing by picking the slice directly
for k in range(2):
    direct = (p.W0 + p.W[:, :, k]) @ x + p.b0 + p.B[:, k]
    print("slice", k, direct)

# backward: only the active slice receives gradient
g = tensor_condition_backward(p, x, one_hot(0, 2), np.array([1.0]))
print("dW[:, :, 0] =", g["W"][:, :, 0], " dW[:, :, 1] =", g["W"][:, :, 1])

# and it agrees with central differences on a random layer
rng = np.random.default_rng(0)
q = TensorCondParams.init(3, 5, 4, rng)
xs, ns = rng.standard_normal((6, 5)), one_hot(rng.integers(4, size=6), 4)
w = rng.standard_normal((6, 3))


def loss_grad(params):
    lp = TensorCondParams.from_dict(params)
    pre, _ = tensor_condition_forward(lp, xs, ns)
    return float(np.sum(w * pre)), tensor_condition_backward(lp, xs, ns, w)


print("max relative error:", finite_diff_check(loss_grad, q.as_dict()))
