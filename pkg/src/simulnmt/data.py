"""Corpus I/O, Pharaoh alignments, and the alignment-driven training-data
transforms (chunk pairs and growing-prefix "Add-M" pairs).

Sentences are lists of tokens; alignments are sets of 0-based
``(source_index, target_index)`` pairs.
"""

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, InputError


# ---------------------------------------------------------------------------
# plain-text corpora


def read_corpus(path):
    """One pre-tokenised sentence per line, tokens separated by spaces."""
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().splitlines()]


def format_corpus(sentences):
    return "".join(" ".join(s) + "\n" for s in sentences)


def write_text_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_corpus(path, sentences):
    write_text_atomic(path, format_corpus(sentences))


# ---------------------------------------------------------------------------
# alignments


def parse_pharaoh(line, lineno=None):
    """Parse ``"i-j i-j ..."`` into a set of ``(i, j)`` pairs."""
    pairs = set()
    col = 0
    for tok in line.split(" "):
        col_here = col + 1
        col += len(tok) + 1
        tok = tok.strip()
        if not tok:
            continue
        left, sep, right = tok.partition("-")
        if not sep or not left.isdigit() or not right.isdigit():
            raise AlignmentError(f"malformed alignment pair {tok!r}", lineno, col_here)
        pairs.add((int(left), int(right)))
    return pairs


def format_pharaoh(alignment):
    return " ".join(f"{i}-{j}" for i, j in sorted(alignment))


def read_alignments(path):
    with open(path, encoding="utf-8") as fh:
        return [parse_pharaoh(line, n) for n, line in enumerate(fh.read().splitlines(), 1)]


def write_alignments(path, alignments):
    write_text_atomic(path, "".join(format_pharaoh(a) + "\n" for a in alignments))


def _check_parallel(src, tgt, alignments):
    if not len(src) == len(tgt) == len(alignments):
        raise InputError(f"corpora and alignments differ in length: "
                         f"{len(src)}, {len(tgt)}, {len(alignments)}")
    for n, (s, t, a) in enumerate(zip(src, tgt, alignments), 1):
        for i, j in a:
            if not (0 <= i < len(s) and 0 <= j < len(t)):
                raise AlignmentError(
                    f"pair {i}-{j} outside sentence lengths {len(s)}x{len(t)}", n)


# ---------------------------------------------------------------------------
# chunk pairs


def chunk_spans(src_len, tgt_len, alignment, n):
    """``[(src_start, src_end, tgt_start, tgt_end)]`` for one sentence.

    A chunk's target span starts where the previous one ended and stops one
    past the largest target index aligned into the chunk; the final chunk
    runs to the end of the target. Chunks with an empty span are dropped.
    """
    if n < 1:
        raise InputError("chunk size must be >= 1")
    spans = []
    prev_end = 0
    for start in range(0, src_len, n):
        end = min(start + n, src_len)
        if end == src_len:
            stop = tgt_len
        else:
            aligned = [j for i, j in alignment if start <= i < end]
            stop = max(aligned) + 1 if aligned else prev_end
        if stop > prev_end:
            spans.append((start, end, prev_end, stop))
            prev_end = stop
    return spans


def chunk_corpus(src, tgt, alignments, n):
    """(source chunk, target span) pairs for every sentence, in order."""
    _check_parallel(src, tgt, alignments)
    out = []
    for s, t, a in zip(src, tgt, alignments):
        for s0, s1, t0, t1 in chunk_spans(len(s), len(t), a, n):
            out.append((s[s0:s1], t[t0:t1]))
    return out


# ---------------------------------------------------------------------------
# growing-prefix pairs


@dataclass(frozen=True)
class PrefixPair:
    source: list
    target: list
    sentence_id: int
    prefix_length: int


def prefix_lengths(src_len, n, m):
    """``n, n+m, n+2m, ...`` below ``src_len``, then ``src_len`` itself."""
    if n < 1 or m < 1:
        raise InputError("N and M must be >= 1")
    lengths = list(range(n, src_len, m))
    lengths.append(src_len)
    return lengths


def target_prefix_length(tgt_len, alignment, src_prefix):
    """Longest target prefix whose aligned words have every alignment point
    inside the first ``src_prefix`` source words, trimmed back to its last
    aligned word."""
    points = {}
    for i, j in alignment:
        points.setdefault(j, []).append(i)
    last_aligned = 0
    for j in range(tgt_len):
        if j not in points:
            continue
        if max(points[j]) >= src_prefix:
            break
        last_aligned = j + 1
    return last_aligned


def addm_corpus(src, tgt, alignments, n=6, m=1):
    """Growing-prefix training pairs; the full sentence pair is always the
    last one emitted for each sentence."""
    _check_parallel(src, tgt, alignments)
    out = []
    for sid, (s, t, a) in enumerate(zip(src, tgt, alignments)):
        for L in prefix_lengths(len(s), n, m):
            k = len(t) if L == len(s) else target_prefix_length(len(t), a, L)
            if L > 0 and k > 0:
                out.append(PrefixPair(s[:L], t[:k], sid, L))
    return out


# ---------------------------------------------------------------------------
# synthetic tasks


SYNTHETIC_TASKS = ("copy", "reverse", "shift")


def synthetic_vocab(vocab_size):
    return [f"w{k}" for k in range(vocab_size)]


def gen_synthetic(task, n_sentences, vocab_size, len_min, len_max, seed):
    """Random token sequences with a deterministic target transform.

    ``copy`` keeps the order, ``reverse`` reverses it, ``shift`` rotates the
    target right by one (the last source word comes first). Returns
    ``(src, tgt, alignments)``.
    """
    if task not in SYNTHETIC_TASKS:
        raise InputError(f"unknown task {task!r}; expected one of {SYNTHETIC_TASKS}")
    if vocab_size < 5:
        raise InputError("vocab_size must be >= 5")
    if not 1 <= len_min <= len_max:
        raise InputError("need 1 <= len_min <= len_max")
    rng = np.random.default_rng(seed)
    words = synthetic_vocab(vocab_size)
    src, tgt, align = [], [], []
    for _ in range(n_sentences):
        n = int(rng.integers(len_min, len_max + 1))
        s = [words[k] for k in rng.integers(0, vocab_size, size=n)]
        if task == "copy":
            perm = list(range(n))
        elif task == "reverse":
            perm = list(range(n - 1, -1, -1))
        else:
            perm = [n - 1] + list(range(n - 1))
        # target position j holds source word perm[j]
        src.append(s)
        tgt.append([s[i] for i in perm])
        align.append({(i, j) for j, i in enumerate(perm)})
    return src, tgt, align
