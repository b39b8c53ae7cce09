"""Incremental READ/WRITE decoding of a streaming source.

After every READ the encoder is extended by one token and the translation is
regenerated from the decoder state saved at the last committed word, so the
committed prefix is never revisited. A WRITE commits words from the current
continuation; with beam search the hypotheses are first re-ranked at the
commit position and only the winner survives.
"""

from dataclasses import dataclass, field

from .agents import AgentContext, AgentState, decide
from .errors import InputError, StreamStateError
from .model import (Hypothesis, beam_search, empty_encoder, encode,
                    encode_extend, greedy_hypothesis, initial_decoder, max_decode_len)
from .vocab import EOS_ID

READ, WRITE = "READ", "WRITE"


class ModelBackend:
    """Adapter exposing the incremental encoder/decoder to a session.

    Tests substitute objects with the same four methods.
    """

    def __init__(self, params):
        self.params = params

    def empty_encoder(self):
        return empty_encoder(self.params)

    def extend(self, enc, token_id):
        return encode_extend(self.params, enc, token_id)

    def initial_state(self):
        return initial_decoder(self.params)

    def search(self, state, enc, max_len, beam):
        """Hypotheses beyond the commit point, best first."""
        if beam == 1:
            return [greedy_hypothesis(self.params, state, enc, max_len)]
        return beam_search(self.params, state, enc, beam, max_len)


def get_new_tokens(t_committed, t_current, n_w):
    """Up to ``n_w`` tokens of ``t_current`` right after the committed
    prefix, stopping before ``</s>``."""
    if n_w < 0:
        raise InputError("n_w must be >= 0")
    k = len(t_committed)
    if list(t_current[:k]) != list(t_committed):
        raise InputError("committed sequence is not a prefix of the current one")
    out = []
    for tok in t_current[k:k + n_w]:
        if tok == EOS_ID:
            break
        out.append(tok)
    return out


@dataclass
class StreamSession:
    """State of one sentence being decoded incrementally."""

    backend: object
    beam: int = 1
    length_norm: bool = False
    s_avail: list = field(default_factory=list)
    t_committed: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    events: list = field(default_factory=list)
    finished: bool = False

    def __post_init__(self):
        if self.beam < 1:
            raise InputError("beam must be >= 1")
        self.enc = self.backend.empty_encoder()
        self.saved_dec = self.backend.initial_state()
        self.current = Hypothesis()
        self.hypotheses = [self.current]
        self.prev_continuation = None

    @classmethod
    def for_params(cls, params, beam=1, length_norm=False):
        return cls(ModelBackend(params), beam=beam, length_norm=length_norm)

    @property
    def t_current(self):
        return self.t_committed + self.current.tokens

    def continuation(self):
        return list(self.current.tokens), self.current.probs

    def read(self, token_id):
        if self.finished:
            raise StreamStateError("READ after the session finished")
        self.prev_continuation = self.continuation()
        self.s_avail.append(token_id)
        self.enc = self.backend.extend(self.enc, token_id)
        budget = max(1, max_decode_len(len(self.s_avail)) - len(self.t_committed))
        self.hypotheses = self.backend.search(self.saved_dec, self.enc, budget, self.beam)
        self.current = self.hypotheses[0]
        self.events.append((READ, len(self.s_avail), len(self.t_committed), []))
        return self

    def context(self):
        prev_tokens = prev_probs = None
        if self.prev_continuation is not None:
            prev_tokens, prev_probs = self.prev_continuation
        tokens, probs = self.continuation()
        return AgentContext(len(self.t_committed), tokens, probs, prev_tokens,
                            prev_probs, len(self.s_avail), self.finished)

    def _select(self, w):
        """Hypothesis with the best score over its first ``w`` tokens."""
        if self.beam == 1:
            return self.current
        best, best_score = None, None
        for hyp in self.hypotheses:
            head = hyp.tokens[:w]
            if len(head) < w or EOS_ID in head:
                continue
            score = hyp.score_at(w) / (w if self.length_norm else 1)
            if best is None or score > best_score:
                best, best_score = hyp, score
        return best

    def write(self, n_w, rerank=True):
        """Commit up to ``n_w`` words; returns the newly committed ids.

        With ``rerank`` (and beam > 1) the words come from the hypothesis that
        scores best over exactly those positions, which may not be the
        current best one.
        """
        if self.finished:
            raise StreamStateError("WRITE after the session finished")
        new = get_new_tokens(self.t_committed, self.t_current, n_w)
        w = len(new)
        if w:
            hyp = self._select(w) if rerank else self.current
            new = hyp.tokens[:w]
            self.t_committed = self.t_committed + new
            self.trace.extend([len(self.s_avail)] * w)
            self.saved_dec = hyp.states[w - 1]
            self.current = Hypothesis(hyp.tokens[w:], hyp.logprobs[w:], hyp.states[w:])
            self.hypotheses = [self.current]
            if self.prev_continuation is not None:
                toks, probs = self.prev_continuation
                self.prev_continuation = (toks[w:], probs[w:])
        self.events.append((WRITE, len(self.s_avail), len(self.t_committed), list(new)))
        return list(new)

    def finish(self):
        """Commit the whole current best continuation and close the session."""
        new = self.write(len(self.current.tokens), rerank=False)
        self.finished = True
        return new


def run_stream(params, agent, source_ids, beam=1, backend=None, length_norm=False):
    """Decode ``source_ids`` one token at a time under ``agent``.

    Returns the finished :class:`StreamSession`; ``t_committed`` is the
    translation and ``trace`` the per-word source counts.
    """
    if not source_ids:
        raise InputError("source must be non-empty")
    if not isinstance(agent, AgentState):
        raise InputError(f"expected an AgentState, got {agent!r}")
    agent = agent.fresh()
    session = StreamSession(backend or ModelBackend(params), beam=beam,
                            length_norm=length_norm)
    last = len(source_ids) - 1
    for k, tok in enumerate(source_ids):
        session.read(tok)
        if k < last:
            session.write(decide(agent, session.context()))
        else:
            session.finish()
    return session


def chunk_decode(params, source_ids, n, beam=1):
    """Translate consecutive ``n``-token chunks independently.

    Each chunk gets a fresh encoder and zero decoder state. Returns
    ``(translation, trace)`` with every word of a chunk stamped with the
    number of source tokens consumed through that chunk.
    """
    if n < 1:
        raise InputError("chunk size must be >= 1")
    backend = ModelBackend(params)
    out, trace = [], []
    for start in range(0, len(source_ids), n):
        chunk = source_ids[start:start + n]
        enc = encode(params, chunk)
        hyp = backend.search(initial_decoder(params), enc, max_decode_len(len(chunk)), beam)[0]
        words = [t for t in hyp.tokens if t != EOS_ID]
        out.extend(words)
        trace.extend([start + len(chunk)] * len(words))
    return out, trace


def chunk_events(n_source, n, translation, trace):
    """READ/WRITE events equivalent to a :func:`chunk_decode` run."""
    events, done = [], 0
    for start in range(0, n_source, n):
        end = min(start + n, n_source)
        for k in range(start + 1, end + 1):
            events.append((READ, k, done, []))
        words = [t for t, s in zip(translation, trace) if s == end]
        done += len(words)
        events.append((WRITE, end, done, words))
    return events


def format_trace_log(events, vocab=None):
    """Tab-separated ``event, source consumed, committed count, tokens``."""
    lines = []
    for event, n_src, n_committed, tokens in events:
        words = [vocab.token(t) for t in tokens] if vocab is not None else map(str, tokens)
        lines.append(f"{event}\t{n_src}\t{n_committed}\t{' '.join(words)}")
    return "\n".join(lines) + ("\n" if lines else "")

