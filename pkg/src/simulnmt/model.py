"""Two-layer uni-directional LSTM encoder, two-layer LSTM decoder with
global dot-product attention, and the step-wise decoding primitives used by
both offline and streaming translation.

The decoder starts from an all-zero state rather than the final encoder
state, and the attentional vector is not fed back into the next step, so a
saved :class:`DecState` fully determines how generation continues.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .numerics import LstmCellParams, attention, log_softmax, lstm_cell_forward
from .vocab import BOS_ID, EOS_ID

NUM_LAYERS = 2


@dataclass
class Seq2SeqParams:
    src_embedding: np.ndarray            # (V_s, E)
    tgt_embedding: np.ndarray            # (V_t, E)
    encoder: tuple                       # NUM_LAYERS x LstmCellParams
    decoder: tuple                       # NUM_LAYERS x LstmCellParams
    attn_proj: np.ndarray                # (H, 2H), applied to [context; hidden]
    out_proj: np.ndarray                 # (V_t, H)
    src_vocab: object = None
    tgt_vocab: object = None

    @property
    def hidden_size(self):
        return self.attn_proj.shape[0]

    @property
    def dtype(self):
        return self.out_proj.dtype

    def named_tensors(self):
        """Name -> array mapping sharing storage with the parameters."""
        out = {"src_embedding": self.src_embedding, "tgt_embedding": self.tgt_embedding}
        for side, layers in (("encoder", self.encoder), ("decoder", self.decoder)):
            for k, layer in enumerate(layers):
                out[f"{side}.{k}.input_weights"] = layer.input_weights
                out[f"{side}.{k}.recurrent_weights"] = layer.recurrent_weights
                out[f"{side}.{k}.bias"] = layer.bias
        out["attn_proj"] = self.attn_proj
        out["out_proj"] = self.out_proj
        return out

    @classmethod
    def from_tensors(cls, tensors, src_vocab=None, tgt_vocab=None):
        def layers(side):
            return tuple(
                LstmCellParams(tensors[f"{side}.{k}.input_weights"],
                               tensors[f"{side}.{k}.recurrent_weights"],
                               tensors[f"{side}.{k}.bias"])
                for k in range(NUM_LAYERS))

        params = cls(tensors["src_embedding"], tensors["tgt_embedding"],
                     layers("encoder"), layers("decoder"),
                     tensors["attn_proj"], tensors["out_proj"], src_vocab, tgt_vocab)
        params.validate()
        return params

    def validate(self):
        E = self.src_embedding.shape[1]
        H = self.hidden_size
        if self.tgt_embedding.shape[1] != E:
            raise InputError("source and target embeddings differ in width")
        for side, layers in (("encoder", self.encoder), ("decoder", self.decoder)):
            if len(layers) != NUM_LAYERS:
                raise InputError(f"{side} must have {NUM_LAYERS} layers")
            for k, layer in enumerate(layers):
                want = E if k == 0 else H
                if layer.input_size != want or layer.hidden_size != H:
                    raise InputError(f"{side} layer {k} has inconsistent dimensions")
        if self.attn_proj.shape != (H, 2 * H):
            raise InputError(f"attn_proj shape {self.attn_proj.shape} != ({H}, {2 * H})")
        if self.out_proj.shape != (self.tgt_embedding.shape[0], H):
            raise InputError("out_proj rows must equal the target vocabulary size")
        if self.src_vocab is not None and len(self.src_vocab) != self.src_embedding.shape[0]:
            raise InputError("source vocabulary size does not match src_embedding")
        if self.tgt_vocab is not None and len(self.tgt_vocab) != self.tgt_embedding.shape[0]:
            raise InputError("target vocabulary size does not match tgt_embedding")

    def map(self, fn):
        """New parameter set with ``fn`` applied to every tensor."""
        return Seq2SeqParams.from_tensors(
            {k: fn(v) for k, v in self.named_tensors().items()},
            self.src_vocab, self.tgt_vocab)

    def copy(self):
        return self.map(np.copy)

    def astype(self, dtype):
        return self.map(lambda a: a.astype(dtype))


def init_params(src_vocab, tgt_vocab, hidden_size, embed_size, rng,
                scale=0.1, forget_bias=1.0, dtype=np.float32):
    """Uniform(-scale, scale) initialisation with forget-gate biases set to
    ``forget_bias``."""
    H, E = hidden_size, embed_size

    def u(*shape):
        return rng.uniform(-scale, scale, size=shape).astype(dtype)

    def lstm(in_size):
        bias = u(4 * H)
        bias[H:2 * H] = forget_bias
        return LstmCellParams(u(4 * H, in_size), u(4 * H, H), bias)

    return Seq2SeqParams(
        src_embedding=u(len(src_vocab), E),
        tgt_embedding=u(len(tgt_vocab), E),
        encoder=(lstm(E), lstm(H)),
        decoder=(lstm(E), lstm(H)),
        attn_proj=u(H, 2 * H),
        out_proj=u(len(tgt_vocab), H),
        src_vocab=src_vocab,
        tgt_vocab=tgt_vocab,
    )


def _zero_layers(params):
    z = np.zeros(params.hidden_size, dtype=params.dtype)
    return tuple((z, z) for _ in range(NUM_LAYERS))


# ---------------------------------------------------------------------------
# encoder


@dataclass(frozen=True)
class EncState:
    """Carried per-layer ``(h, c)`` plus the top-layer outputs so far.

    Only the first ``length`` rows of ``memory`` are ever read.
    """

    layers: tuple
    memory: np.ndarray
    length: int = 0

    @property
    def states(self):
        return self.memory[:self.length]

    def __len__(self):
        return self.length


def empty_encoder(params):
    return EncState(_zero_layers(params),
                    np.zeros((0, params.hidden_size), dtype=params.dtype), 0)


def _check_src_id(params, token_id):
    if not 0 <= token_id < params.src_embedding.shape[0]:
        raise InputError(f"source id {token_id} outside vocabulary of size "
                         f"{params.src_embedding.shape[0]}")


def encode_extend(params, state, token_id):
    """Consume one more source token; earlier outputs are left untouched."""
    _check_src_id(params, token_id)
    x = params.src_embedding[token_id]
    new_layers = []
    for layer, (h, c) in zip(params.encoder, state.layers):
        h, c = lstm_cell_forward(x, h, c, layer)
        new_layers.append((h, c))
        x = h
    memory = np.concatenate([state.states, x[None, :]], axis=0)
    return EncState(tuple(new_layers), memory, state.length + 1)


def encode(params, token_ids):
    """Offline encoding: run each layer over the whole sequence in turn."""
    for t in token_ids:
        _check_src_id(params, t)
    xs = [params.src_embedding[t] for t in token_ids]
    final = []
    for layer in params.encoder:
        h = c = np.zeros(params.hidden_size, dtype=params.dtype)
        outs = []
        for x in xs:
            h, c = lstm_cell_forward(x, h, c, layer)
            outs.append(h)
        final.append((h, c))
        xs = outs
    memory = (np.stack(xs) if xs
              else np.zeros((0, params.hidden_size), dtype=params.dtype))
    layers = tuple(final) if xs else _zero_layers(params)
    return EncState(layers, memory, len(xs))


# ---------------------------------------------------------------------------
# decoder


@dataclass(frozen=True)
class DecState:
    """Per-layer decoder ``(h, c)`` and the last emitted target id.

    ``last_token`` is ``None`` for a state returned by :func:`decode_step`
    before the caller has picked the token; use :meth:`feed`.
    """

    layers: tuple
    last_token: int | None = BOS_ID

    def feed(self, token_id):
        return DecState(self.layers, int(token_id))


def initial_decoder(params):
    return DecState(_zero_layers(params), BOS_ID)


def decode_step(params, state, enc):
    """One decoder step over exactly the stored encoder states.

    Returns ``(logprobs, next_state)``; ``next_state.last_token`` is unset.
    """
    if enc.length == 0:
        raise InputError("decode_step needs at least one encoder state")
    if state.last_token is None:
        raise InputError("decoder state has no last token; call feed() first")
    x = params.tgt_embedding[state.last_token]
    new_layers = []
    for layer, (h, c) in zip(params.decoder, state.layers):
        h, c = lstm_cell_forward(x, h, c, layer)
        new_layers.append((h, c))
        x = h
    context, _ = attention(x, enc.states)
    attn_h = np.tanh(params.attn_proj @ np.concatenate([context, x]))
    logprobs = log_softmax(params.out_proj @ attn_h)
    return logprobs, DecState(tuple(new_layers), None)


def max_decode_len(n_source):
    return 2 * n_source + 5


@dataclass
class Hypothesis:
    """A continuation beyond the last commit point.

    ``states[k]`` is the decoder state after emitting ``tokens[k]``.
    """

    tokens: list = field(default_factory=list)
    logprobs: list = field(default_factory=list)
    states: list = field(default_factory=list)

    @property
    def score(self):
        return float(sum(self.logprobs))

    def score_at(self, k):
        """Cumulative log-probability of the first ``k`` tokens."""
        return float(sum(self.logprobs[:k]))

    @property
    def probs(self):
        return [float(np.exp(lp)) for lp in self.logprobs]

    @property
    def finished(self):
        return bool(self.tokens) and self.tokens[-1] == EOS_ID

    def extend(self, token, logprob, state):
        return Hypothesis(self.tokens + [token], self.logprobs + [logprob],
                          self.states + [state])


def greedy_hypothesis(params, state, enc, max_len):
    """Arg-max decoding from ``state`` until ``</s>`` or ``max_len`` tokens."""
    if max_len < 1:
        raise InputError("max_len must be >= 1")
    hyp = Hypothesis()
    for _ in range(max_len):
        logprobs, nxt = decode_step(params, state, enc)
        tok = int(np.argmax(logprobs))
        state = nxt.feed(tok)
        hyp = hyp.extend(tok, float(logprobs[tok]), state)
        if tok == EOS_ID:
            break
    return hyp


def greedy_continue(params, state, enc, max_len):
    """Greedy continuation from a saved decoder state.

    Returns ``(tokens, probs, states)`` where ``states[k]`` is the decoder
    state after ``tokens[k]``; ``tokens`` ends with ``</s>`` when the model
    emitted it.
    """
    hyp = greedy_hypothesis(params, state, enc, max_len)
    return hyp.tokens, hyp.probs, hyp.states


def beam_search(params, state, enc, beam, max_len):
    """Beam search from ``state``; returns every surviving hypothesis, best
    (highest raw log-probability) first.

    Candidates ending in ``</s>`` leave the beam; search stops when the beam
    empties, ``beam`` hypotheses have finished, or ``max_len`` is reached.
    """
    if beam < 1 or max_len < 1:
        raise InputError("beam and max_len must be >= 1")
    alive = [Hypothesis(states=[])]
    starts = [state]
    finished = []
    for _ in range(max_len):
        cands = []
        for hi, (hyp, st) in enumerate(zip(alive, starts)):
            logprobs, nxt = decode_step(params, st, enc)
            for tok in np.argsort(-logprobs, kind="stable")[:beam]:
                lp = float(logprobs[tok])
                cands.append((hyp.score + lp, hi, int(tok), lp, nxt))
        cands.sort(key=lambda c: -c[0])
        new_alive, new_starts = [], []
        for _, hi, tok, lp, nxt in cands[:beam]:
            st = nxt.feed(tok)
            hyp = alive[hi].extend(tok, lp, st)
            if tok == EOS_ID:
                finished.append(hyp)
            else:
                new_alive.append(hyp)
                new_starts.append(st)
        alive, starts = new_alive, new_starts
        if not alive or len(finished) >= beam:
            break
    pool = finished + alive
    pool.sort(key=lambda h: -h.score)
    return pool


def translate(params, src_ids, beam=1):
    """Offline decoding of a complete source; returns target ids without
    ``</s>``."""
    if not src_ids:
        return []
    enc = encode(params, src_ids)
    state = initial_decoder(params)
    max_len = max_decode_len(len(src_ids))
    if beam == 1:
        tokens = greedy_hypothesis(params, state, enc, max_len).tokens
    else:
        tokens = beam_search(params, state, enc, beam, max_len)[0].tokens
    return [t for t in tokens if t != EOS_ID]


def translate_tokens(params, src_tokens, beam=1):
    """String-level wrapper around :func:`translate`."""
    ids = params.src_vocab.encode(src_tokens)
    return params.tgt_vocab.decode(translate(params, ids, beam))
