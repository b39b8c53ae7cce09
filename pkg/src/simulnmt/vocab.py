"""Token <-> id mapping with reserved control tokens."""

from collections import Counter

from .errors import InputError

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
RESERVED = (PAD, BOS, EOS, UNK)


class Vocabulary:
    """Bidirectional map; ids 0-3 are always ``<pad> <s> </s> <unk>``."""

    def __init__(self, tokens=()):
        self._id_to_token = list(RESERVED)
        self._token_to_id = {t: i for i, t in enumerate(RESERVED)}
        for t in tokens:
            if t in self._token_to_id:
                raise InputError(f"duplicate vocabulary entry {t!r}")
            self._token_to_id[t] = len(self._id_to_token)
            self._id_to_token.append(t)

    @classmethod
    def from_list(cls, id_to_token):
        """Rebuild from a full id-ordered token list (reserved entries first)."""
        if tuple(id_to_token[:4]) != RESERVED:
            raise InputError("vocabulary list must start with the reserved tokens")
        return cls(id_to_token[4:])

    def to_list(self):
        return list(self._id_to_token)

    def __len__(self):
        return len(self._id_to_token)

    def __contains__(self, token):
        return token in self._token_to_id

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self._id_to_token == other._id_to_token

    def id(self, token):
        return self._token_to_id.get(token, UNK_ID)

    def token(self, idx):
        if not 0 <= idx < len(self._id_to_token):
            raise InputError(f"id {idx} outside vocabulary of size {len(self)}")
        return self._id_to_token[idx]

    def encode(self, tokens):
        return [self.id(t) for t in tokens]

    def decode(self, ids):
        """Map ids to tokens, dropping <pad>, <s> and </s>."""
        return [self._id_to_token[i] for i in ids if i >= UNK_ID]

    def __repr__(self):
        return f"Vocabulary(size={len(self)})"


def build_vocab(corpus, max_size):
    """Keep the ``max_size - 4`` most frequent tokens; ties break
    lexicographically."""
    corpus = list(corpus)
    if not corpus or not any(corpus):
        raise InputError("cannot build a vocabulary from an empty corpus")
    if max_size < len(RESERVED):
        raise InputError(f"max_size must be at least {len(RESERVED)}")
    counts = Counter(t for sent in corpus for t in sent if t not in RESERVED)
    ranked = sorted(counts, key=lambda t: (-counts[t], t))
    return Vocabulary(ranked[:max_size - len(RESERVED)])
