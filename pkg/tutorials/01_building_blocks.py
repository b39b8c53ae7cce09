# %% [markdown]
# # Building blocks
#
# The translation model is built from three small numpy pieces: an LSTM
# cell, dot-product attention and a softmax cross-entropy loss. Each has a
# hand-written backward pass, and `grad_check` compares it against central
# finite differences.

# %%
import numpy as np

from simulnmt.numerics import (LstmCellParams, attention, grad_check, lstm_cell_backward,
                               lstm_cell_forward, lstm_cell_step, softmax_cross_entropy)

rng = np.random.default_rng(0)
H, E = 4, 3
cell = LstmCellParams(rng.uniform(-.5, .5, (4 * H, E)),
                      rng.uniform(-.5, .5, (4 * H, H)),
                      rng.uniform(-.5, .5, 4 * H))
h, c = lstm_cell_forward(rng.normal(size=E), np.zeros(H), np.zeros(H), cell)
print("h =", np.round(h, 4))
print("c =", np.round(c, 4))

# %% [markdown]
# Attention turns a decoder query and a stack of encoder states into a
# probability vector and a weighted context.

# %%
states = rng.normal(size=(5, H))
context, weights = attention(h, states)
print("weights", np.round(weights, 3), "sum", weights.sum())

# %% [markdown]
# ## Checking gradients
#
# `grad_check` takes a function returning `(loss, grads)` and a dict of
# arrays, perturbs every element in turn and reports the worst relative
# error. Anything below 1e-4 in float64 means the backward pass agrees.

# %%
w_h = rng.normal(size=H)
point = {"x": rng.normal(size=E), "h": rng.normal(size=H), "c": rng.normal(size=H)}


def loss_fn(p):
    h, c, cache = lstm_cell_step(p["x"], p["h"], p["c"], cell)
    dx, dh, dc, _ = lstm_cell_backward(w_h, np.zeros(H), cache, cell)
    return float(w_h @ h), {"x": dx, "h": dh, "c": dc}


print("LSTM cell max relative error:", grad_check(loss_fn, point))

loss, grad = softmax_cross_entropy(np.zeros(7), 3)
print("uniform logits over 7 classes -> loss", loss, "= ln 7 =", np.log(7))
