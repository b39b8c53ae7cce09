import time

import numpy as np
import pytest

from simulnmt.data import gen_synthetic
from simulnmt.model import Hypothesis, init_params
from simulnmt.numerics import TrainConfig
from simulnmt.training import train_full
from simulnmt.vocab import EOS_ID, Vocabulary

ACCEPTANCE_RESULTS = {}

TOY = dict(n_sentences=2000, vocab_size=20, len_min=4, len_max=8)


def record(criterion, passed, detail):
    ACCEPTANCE_RESULTS[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")


def small_params(seed=0, V_s=9, V_t=8, H=5, E=4, dtype=np.float64, scale=0.5):
    rng = np.random.default_rng(seed)
    src = Vocabulary([f"s{k}" for k in range(V_s - 4)])
    tgt = Vocabulary([f"t{k}" for k in range(V_t - 4)])
    return init_params(src, tgt, H, E, rng, scale=scale, dtype=dtype)


class _Trained:
    def __init__(self, task):
        self.task = task
        self.src, self.tgt, self.align = gen_synthetic(task, seed=0, **TOY)
        self.dev_src, self.dev_tgt, _ = gen_synthetic(task, 200, 20, 4, 8, seed=1)
        self.cfg = TrainConfig.desk()
        self.losses = []
        t0 = time.perf_counter()
        self.params = train_full(self.src, self.tgt, self.cfg,
                                 callback=lambda e, loss, lr: self.losses.append(loss))
        self.train_seconds = time.perf_counter() - t0


_CACHE = {}


def trained(task):
    if task not in _CACHE:
        _CACHE[task] = _Trained(task)
    return _CACHE[task]


@pytest.fixture(scope="session")
def copy_model():
    return trained("copy")


@pytest.fixture(scope="session")
def reverse_model():
    return trained("reverse")


@pytest.fixture(scope="session")
def shift_model():
    return trained("shift")


class OneWordPerReadBackend:
    """Stub decoder whose current translation always has exactly one word
    per source token read, followed by ``</s>``.

    Encoder "state" is the number of tokens read; decoder "state" is the
    number of words committed.
    """

    def empty_encoder(self):
        return 0

    def extend(self, enc, token_id):
        return enc + 1

    def initial_state(self):
        return 0

    def search(self, state, enc, max_len, beam):
        n = max(enc - state, 0)
        tokens = [4 + state + k for k in range(n)] + [EOS_ID]
        tokens = tokens[:max_len]
        return [Hypothesis(tokens, [-0.1] * len(tokens),
                           [state + k + 1 for k in range(len(tokens))])]


@pytest.fixture
def stub_backend():
    return OneWordPerReadBackend()
