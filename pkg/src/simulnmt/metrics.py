"""Latency (Average Proportion) and quality (BLEU) measurement."""

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field

from .errors import InputError
from .stream import chunk_decode, run_stream


class UndefinedAPError(InputError):
    """AP is undefined for an empty translation."""


def average_proportion(trace, src_len):
    """``sum(trace) / (src_len * len(trace))``: the mean fraction of the
    source read before each target word was committed."""
    if not trace:
        raise UndefinedAPError("AP is undefined for an empty trace")
    if src_len < 1:
        raise InputError("source length must be positive")
    if any(s < 1 or s > src_len for s in trace):
        raise InputError(f"trace entries must lie in [1, {src_len}]")
    return sum(trace) / (src_len * len(trace))


def ngram_counts(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(candidates, references, max_n=4):
    """Pooled clipped matches, candidate n-gram totals and lengths."""
    if len(candidates) != len(references):
        raise InputError(f"{len(candidates)} candidates vs {len(references)} references")
    matches = [0] * max_n
    totals = [0] * max_n
    c_len = r_len = 0
    for cand, ref in zip(candidates, references):
        c_len += len(cand)
        r_len += len(ref)
        for n in range(1, max_n + 1):
            c = ngram_counts(cand, n)
            r = ngram_counts(ref, n)
            matches[n - 1] += sum(min(k, r[g]) for g, k in c.items())
            totals[n - 1] += max(len(cand) - n + 1, 0)
    return matches, totals, c_len, r_len


def corpus_bleu(candidates, references, max_n=4):
    """Corpus BLEU in [0, 1]: geometric mean of clipped n-gram precisions
    times the brevity penalty; no smoothing."""
    if not references:
        raise InputError("references must be non-empty")
    matches, totals, c_len, r_len = bleu_stats(candidates, references, max_n)
    if c_len == 0 or any(m == 0 for m in matches):
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    return bp * math.exp(log_p)


def sentence_bleu_smoothed(candidate, reference, max_n=4):
    """Diagnostic sentence BLEU with add-one smoothing for n >= 2.

    Not comparable with corpus BLEU; only for per-sentence reports.
    """
    matches, totals, c_len, r_len = bleu_stats([candidate], [reference], max_n)
    if c_len == 0 or matches[0] == 0:
        return 0.0
    log_p = math.log(matches[0] / totals[0])
    for m, t in zip(matches[1:], totals[1:]):
        log_p += math.log((m + 1) / (t + 1))
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    return bp * math.exp(log_p / max_n)


@dataclass
class EvalResult:
    agent: str
    bleu: float
    ap: float | None
    n_sentences: int
    excluded_empty: int
    per_sentence: list = field(default_factory=list)   # (bleu, ap or None)
    translations: list = field(default_factory=list)

    def to_json(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("per_sentence", "translations")}
        return json.dumps(d, sort_keys=True)

    def per_sentence_tsv(self):
        rows = ["sentence\tbleu\tap"]
        for k, (b, ap) in enumerate(self.per_sentence):
            rows.append(f"{k}\t{b:.6f}\t{'' if ap is None else f'{ap:.6f}'}")
        return "\n".join(rows) + "\n"


def summarize(agent_name, translations, traces, sources, references):
    """Corpus BLEU plus mean AP over sentences with a non-empty output."""
    aps, per = [], []
    excluded = 0
    for hyp, trace, src, ref in zip(translations, traces, sources, references):
        try:
            ap = average_proportion(trace, len(src))
            aps.append(ap)
        except UndefinedAPError:
            ap = None
            excluded += 1
        per.append((sentence_bleu_smoothed(hyp, ref), ap))
    return EvalResult(
        agent=agent_name,
        bleu=corpus_bleu(translations, references),
        ap=sum(aps) / len(aps) if aps else None,
        n_sentences=len(sources),
        excluded_empty=excluded,
        per_sentence=per,
        translations=translations,
    )


def evaluate_agent(params, agent, src_corpus, ref_corpus, beam=1):
    """Stream-decode every source sentence and score the outputs.

    ``agent`` is an :class:`~simulnmt.agents.AgentState` or ``("chunk", N)``;
    corpora are lists of token lists.
    """
    if len(src_corpus) != len(ref_corpus):
        raise InputError("source and reference corpora differ in length")
    outs, traces = [], []
    for src in src_corpus:
        ids = params.src_vocab.encode(src)
        if not ids:
            out, trace = [], []
        elif isinstance(agent, tuple):
            out, trace = chunk_decode(params, ids, agent[1], beam)
        else:
            session = run_stream(params, agent, ids, beam)
            out, trace = session.t_committed, session.trace
        outs.append([params.tgt_vocab.token(t) for t in out])
        traces.append(trace)
    name = f"chunk:{agent[1]}" if isinstance(agent, tuple) else agent.describe()
    return summarize(name, outs, traces, src_corpus, ref_corpus)
