"""Dense neural primitives: LSTM cell, dot-product attention, softmax
cross-entropy, clipped SGD and a central finite-difference gradient check.

Tensors are plain :class:`numpy.ndarray` objects. Every function computes in
the dtype of its inputs, so the same code serves float32 model storage and
float64 verification. Batched inputs are accepted wherever the leading axes
are free (``x`` of shape ``(E,)`` or ``(B, E)``).
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import GradCheckError, InputError


@dataclass(frozen=True)
class LstmCellParams:
    """Weights of one LSTM layer; gate blocks ordered input, forget,
    cell candidate, output."""

    input_weights: np.ndarray      # (4H, E)
    recurrent_weights: np.ndarray  # (4H, H)
    bias: np.ndarray               # (4H,)

    def __post_init__(self):
        four_h, _ = self.input_weights.shape
        if four_h % 4:
            raise InputError("input_weights rows must be a multiple of 4")
        if self.recurrent_weights.shape != (four_h, four_h // 4):
            raise InputError(
                f"recurrent_weights shape {self.recurrent_weights.shape} "
                f"inconsistent with hidden size {four_h // 4}")
        if self.bias.shape != (four_h,):
            raise InputError(f"bias shape {self.bias.shape} != ({four_h},)")

    @property
    def hidden_size(self):
        return self.recurrent_weights.shape[1]

    @property
    def input_size(self):
        return self.input_weights.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Training hyper-parameters.

    Unset fields reproduce the published NMT setup (500-d states, SGD at
    lr 1.0 halved per epoch late in training, dropout 0.3, 13 epochs).
    ``desk()`` gives the small configuration used for toy tasks.
    """

    learning_rate: float = 1.0
    decay_rate: float = 0.5
    dropout: float = 0.3
    epochs: int = 13
    hidden_size: int = 500
    embed_size: int = 500
    seed: int = 0
    decay_start: int = 8
    batch_size: int = 64
    clip: float | None = 5.0
    max_vocab: int = 50000
    init_scale: float = 0.1

    def __post_init__(self):
        if self.learning_rate < 0:
            raise InputError("learning_rate must be >= 0")
        if not 0 < self.decay_rate <= 1:
            raise InputError("decay_rate must lie in (0, 1]")
        if not 0 <= self.dropout < 1:
            raise InputError("dropout must lie in [0, 1)")
        if self.epochs < 0 or self.hidden_size < 1 or self.embed_size < 1:
            raise InputError("epochs, hidden_size and embed_size must be positive")
        if self.batch_size < 1:
            raise InputError("batch_size must be positive")

    @classmethod
    def paper(cls, **overrides):
        return replace(cls(), **overrides)

    @classmethod
    def desk(cls, **overrides):
        base = cls(hidden_size=64, embed_size=64, batch_size=16, max_vocab=200)
        return replace(base, **overrides)

    @classmethod
    def fine_tune_default(cls, base=None, **overrides):
        """3 epochs at lr 0.1 with no decay, other fields taken from ``base``."""
        base = base if base is not None else cls.desk()
        cfg = replace(base, epochs=3, learning_rate=0.1, decay_rate=1.0)
        return replace(cfg, **overrides)

    def lr_at(self, epoch):
        """Learning rate used during 1-based ``epoch``."""
        return self.learning_rate * self.decay_rate ** max(0, epoch - self.decay_start)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def sigmoid(x):
    # tanh form stays finite for any input
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# LSTM cell


def _check_cell_dims(x, h_prev, c_prev, p):
    if x.shape[-1] != p.input_size:
        raise InputError(f"input has size {x.shape[-1]}, cell expects {p.input_size}")
    if h_prev.shape[-1] != p.hidden_size or c_prev.shape[-1] != p.hidden_size:
        raise InputError(
            f"state sizes {h_prev.shape[-1]}/{c_prev.shape[-1]} "
            f"!= hidden size {p.hidden_size}")
    if h_prev.shape != c_prev.shape or x.shape[:-1] != h_prev.shape[:-1]:
        raise InputError("leading (batch) dimensions of x, h_prev, c_prev differ")


def lstm_cell_step(x, h_prev, c_prev, p):
    """One LSTM step returning ``(h, c, cache)``; ``cache`` feeds
    :func:`lstm_cell_backward`."""
    _check_cell_dims(x, h_prev, c_prev, p)
    H = p.hidden_size
    z = x @ p.input_weights.T + h_prev @ p.recurrent_weights.T + p.bias
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, g, o, tc)


def lstm_cell_forward(x, h_prev, c_prev, p):
    """Standard LSTM recurrence; returns ``(h, c)``."""
    h, c, _ = lstm_cell_step(x, h_prev, c_prev, p)
    return h, c


def lstm_cell_backward(dh, dc, cache, p):
    """Backpropagate through one step.

    Returns ``(dx, dh_prev, dc_prev, grads)`` with ``grads`` an
    :class:`LstmCellParams` of parameter gradients (summed over any batch axis).
    """
    x, h_prev, c_prev, i, f, g, o, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dc_prev = dc * f
    dz = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)],
        axis=-1)
    dx = dz @ p.input_weights
    dh_prev = dz @ p.recurrent_weights
    dz2 = dz.reshape(-1, dz.shape[-1])
    grads = LstmCellParams(
        input_weights=dz2.T @ x.reshape(-1, x.shape[-1]),
        recurrent_weights=dz2.T @ h_prev.reshape(-1, h_prev.shape[-1]),
        bias=dz2.sum(axis=0),
    )
    return dx, dh_prev, dc_prev, grads


# ---------------------------------------------------------------------------
# attention


def attention(query, enc_states):
    """Global dot-product attention of one query over ``enc_states`` (n, H).

    Returns ``(context, weights)``.
    """
    enc_states = np.asarray(enc_states)
    if enc_states.ndim != 2 or enc_states.shape[0] == 0:
        raise InputError("attention needs at least one encoder state")
    if query.shape != enc_states.shape[1:]:
        raise InputError(f"query shape {query.shape} does not match states {enc_states.shape}")
    weights = softmax(enc_states @ query)
    return weights @ enc_states, weights


def attention_backward(dcontext, dweights, query, enc_states, weights):
    """Gradients of :func:`attention` w.r.t. ``query`` and ``enc_states``.

    ``dweights`` may be ``None`` when only the context is consumed.
    """
    dw = enc_states @ dcontext
    if dweights is not None:
        dw = dw + dweights
    dscores = weights * (dw - weights @ dw)
    dquery = dscores @ enc_states
    denc = np.outer(weights, dcontext) + np.outer(dscores, query)
    return dquery, denc


# ---------------------------------------------------------------------------
# loss and optimiser


def softmax_cross_entropy(logits, target_index):
    """``-log softmax(logits)[target]`` and its gradient w.r.t. ``logits``."""
    logits = np.asarray(logits)
    if logits.ndim != 1:
        raise InputError("logits must be a vector")
    if not 0 <= target_index < logits.shape[0]:
        raise InputError(f"target index {target_index} outside [0, {logits.shape[0]})")
    logp = log_softmax(logits)
    grad = np.exp(logp)
    grad[target_index] -= 1.0
    return float(-logp[target_index]), grad


def global_norm(grads):
    return float(np.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values())))


def sgd_step(params, grads, lr, clip=5.0):
    """In-place ``p -= lr * g`` over a name->array mapping.

    When ``clip`` is set and the global gradient norm exceeds it, every
    gradient is scaled by ``clip / norm`` first. Returns ``params``.
    """
    if lr < 0:
        raise InputError("learning rate must be non-negative")
    if params.keys() != grads.keys():
        raise InputError(f"gradient names differ from parameter names: "
                         f"{sorted(set(params) ^ set(grads))}")
    for name, p in params.items():
        if grads[name].shape != p.shape:
            raise InputError(f"{name}: gradient shape {grads[name].shape} != {p.shape}")
    scale = 1.0
    if clip is not None:
        norm = global_norm(grads)
        if norm > clip:
            scale = clip / norm
    if lr == 0:
        return params
    for name, p in params.items():
        p -= (lr * scale) * grads[name].astype(p.dtype, copy=False)
    return params


# ---------------------------------------------------------------------------
# finite differences


def grad_check(loss_fn, params, epsilon=1e-5, floor=1e-6):
    """Largest elementwise relative error between analytic and central
    finite-difference gradients.

    ``loss_fn(params)`` must return ``(loss, grads)`` where ``grads`` maps the
    same names as ``params``. Arrays in ``params`` are perturbed in place and
    restored. Relative error is ``|a - n| / max(|a| + |n|, floor)``.
    """
    loss, analytic = loss_fn(params)
    if not np.isfinite(loss):
        raise GradCheckError(f"non-finite loss {loss} at the unperturbed point")
    worst = 0.0
    for name, p in params.items():
        a = np.asarray(analytic[name], dtype=np.float64)
        if a.shape != p.shape:
            raise InputError(f"{name}: analytic gradient shape {a.shape} != {p.shape}")
        flat = p.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + epsilon
            plus = loss_fn(params)[0]
            flat[k] = orig - epsilon
            minus = loss_fn(params)[0]
            flat[k] = orig
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise GradCheckError(f"non-finite loss perturbing {name}[{k}]")
            numeric = (plus - minus) / (2.0 * epsilon)
            ak = a.reshape(-1)[k]
            err = abs(ak - numeric) / max(abs(ak) + abs(numeric), floor)
            worst = max(worst, err)
    return worst

