"""Commit policies: how many words to WRITE after each READ.

Every policy sees an :class:`AgentContext` built after the READ. The
end-of-source flush is handled by the stream decoder, so these functions
only cover mid-stream decisions.
"""

import re
from dataclasses import dataclass, replace

from .errors import InputError

WUE, WIW, WID, STATIC_RW = "WUE", "WIW", "WID", "STATIC_RW"
KINDS = (WUE, WIW, WID, STATIC_RW)


@dataclass(frozen=True)
class AgentContext:
    """What a policy may look at after a READ.

    ``cur_*`` is the freshly regenerated continuation beyond the committed
    prefix; ``prev_*`` is the continuation before this READ (``None`` on the
    first READ), shifted to the same commit point.
    """

    n_committed: int
    cur_tokens: list
    cur_probs: list
    prev_tokens: list | None
    prev_probs: list | None
    n_read: int
    source_finished: bool = False


@dataclass
class AgentState:
    kind: str
    S: int = 0
    RW: int = 0
    reads_since_phase: int = 0
    in_startup: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown agent kind {self.kind!r}")
        if self.kind == STATIC_RW and (self.S < 1 or self.RW < 1):
            raise InputError("STATIC_RW needs S >= 1 and RW >= 1")

    def fresh(self):
        """Same policy with counters reset, for a new sentence."""
        return replace(self, reads_since_phase=0, in_startup=True)

    def describe(self):
        if self.kind == STATIC_RW:
            return f"static:{self.S},{self.RW}"
        return self.kind.lower()


def decide_wue(ctx):
    return 0


def decide_wiw(ctx):
    """Commit leading positions whose probability did not drop since the
    previous READ."""
    if ctx.prev_probs is None:
        return 0
    n = 0
    for j, p in enumerate(ctx.cur_probs):
        if j >= len(ctx.prev_probs) or p < ctx.prev_probs[j]:
            break
        n += 1
    return n


def decide_wid(ctx):
    """Commit leading positions whose token did not change since the
    previous READ."""
    if ctx.prev_tokens is None:
        return 0
    n = 0
    for j, tok in enumerate(ctx.cur_tokens):
        if j >= len(ctx.prev_tokens) or tok != ctx.prev_tokens[j]:
            break
        n += 1
    return n


def decide_static_rw(state, ctx):
    """``S`` startup READs, then ``RW`` WRITEs after every group of ``RW``
    further READs. Token content is never consulted."""
    state.reads_since_phase += 1
    if state.in_startup:
        if state.reads_since_phase < state.S:
            return 0
        state.in_startup = False
        state.reads_since_phase = 0
        return state.RW
    if state.reads_since_phase < state.RW:
        return 0
    state.reads_since_phase = 0
    return state.RW


def decide(state, ctx):
    if state.kind == WUE:
        return decide_wue(ctx)
    if state.kind == WIW:
        return decide_wiw(ctx)
    if state.kind == WID:
        return decide_wid(ctx)
    return decide_static_rw(state, ctx)


def static_rw(S, RW):
    return AgentState(STATIC_RW, S=S, RW=RW)


_STATIC = re.compile(r"^static:(\d+),(\d+)$")
_CHUNK = re.compile(r"^chunk:(\d+)$")
AGENT_FORMS = "wue | wiw | wid | static:S,RW | chunk:N"


def parse_agent(text):
    """Parse an agent string.

    Returns an :class:`AgentState`, or ``("chunk", N)`` for the chunk
    baseline which is not an incremental agent.
    """
    s = text.strip().lower()
    if s in ("wue", "wiw", "wid"):
        return AgentState(s.upper())
    m = _STATIC.match(s)
    if m and int(m.group(1)) >= 1 and int(m.group(2)) >= 1:
        return static_rw(int(m.group(1)), int(m.group(2)))
    m = _CHUNK.match(s)
    if m and int(m.group(1)) >= 1:
        return ("chunk", int(m.group(1)))
    raise InputError(f"invalid agent {text!r}; valid forms: {AGENT_FORMS}")
