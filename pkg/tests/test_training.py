from dataclasses import replace

import numpy as np
import pytest

from conftest import small_params
from simulnmt.data import gen_synthetic
from simulnmt.errors import InputError
from simulnmt.metrics import corpus_bleu
from simulnmt.model import decode_step, encode, initial_decoder, translate_tokens
from simulnmt.numerics import TrainConfig, grad_check, softmax_cross_entropy
from simulnmt.training import batch_loss, fine_tune, pad_batch, train_full

TINY = dict(epochs=1, hidden_size=6, embed_size=5, batch_size=4, max_vocab=50)


def _tiny_corpus(n=12, seed=3):
    src, tgt, _ = gen_synthetic("copy", n, 6, 2, 4, seed)
    return src, tgt


def test_pad_batch_layout():
    src, sm, tin, tout, tm = pad_batch([[4, 5], [6]], [[7], [8, 9]])
    assert src.tolist() == [[4, 5], [6, 0]]
    assert tin.tolist() == [[1, 7, 0], [1, 8, 9]]
    assert tout.tolist() == [[7, 2, 0], [8, 9, 2]]
    assert tm.tolist() == [[True, True, False], [True, True, True]]
    assert sm.tolist() == [[True, True], [True, False]]


def test_batch_loss_matches_step_by_step_decoding():
    """Teacher-forced batch loss equals the sum of per-step NLLs from the
    inference path (no dropout, batch of one)."""
    p = small_params(0)
    src, tgt = [4, 6, 5], [7, 5]
    loss, _, n_tok, total = batch_loss(p, [src], [tgt])
    enc = encode(p, src)
    state = initial_decoder(p)
    ref = 0.0
    for tok in tgt + [2]:
        lp, nxt = decode_step(p, state, enc)
        ref -= lp[tok]
        state = nxt.feed(tok)
    assert n_tok == 3
    assert total == pytest.approx(ref, rel=1e-12)
    assert loss == pytest.approx(ref, rel=1e-12)


def test_padding_does_not_leak():
    p = small_params(1)
    a = batch_loss(p, [[4, 5]], [[6]])[3]
    b = batch_loss(p, [[4, 5], [7, 8, 6, 4, 5]], [[6], [5, 5, 5]])
    c = batch_loss(p, [[7, 8, 6, 4, 5]], [[5, 5, 5]])[3]
    assert b[3] == pytest.approx(a + c, rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_batch_loss_gradients(seed):
    p = small_params(seed, H=3, E=2, V_s=7, V_t=6)
    tensors = p.named_tensors()
    src = [[4, 5, 6], [5]]
    tgt = [[4, 5], [5, 4, 4]]

    def loss_fn(_):
        loss, grads, _, _ = batch_loss(p, src, tgt)
        return loss, grads

    assert grad_check(loss_fn, tensors, 1e-5) < 1e-4


def test_zero_learning_rate_leaves_parameters():
    src, tgt = _tiny_corpus()
    cfg = TrainConfig.desk(**TINY, learning_rate=0.0)
    a = train_full(src, tgt, replace(cfg, epochs=0))
    b = train_full(src, tgt, cfg)
    for name, arr in a.named_tensors().items():
        assert np.array_equal(arr, b.named_tensors()[name]), name


def test_training_is_deterministic():
    src, tgt = _tiny_corpus()
    cfg = TrainConfig.desk(**dict(TINY, epochs=2))
    a = train_full(src, tgt, cfg)
    b = train_full(src, tgt, cfg)
    for name, arr in a.named_tensors().items():
        assert arr.tobytes() == b.named_tensors()[name].tobytes()


def test_length_mismatch_rejected():
    with pytest.raises(InputError):
        train_full([["a"]], [["a"], ["b"]], TrainConfig.desk(**TINY))


def test_callback_reports_each_epoch():
    src, tgt = _tiny_corpus()
    seen = []
    train_full(src, tgt, TrainConfig.desk(**dict(TINY, epochs=3)),
               callback=lambda e, loss, lr: seen.append((e, lr)))
    assert [e for e, _ in seen] == [1, 2, 3]


def test_fine_tune_zero_epochs_is_identity():
    p = small_params(2, dtype=np.float32)
    cfg = TrainConfig.desk(**dict(TINY, epochs=0))
    q = fine_tune(p, [["s0"]], [["t0"]], cfg)
    assert q is not p
    for name, arr in p.named_tensors().items():
        assert np.array_equal(arr, q.named_tensors()[name])


def test_fine_tune_does_not_touch_input():
    p = small_params(3, dtype=np.float32)
    before = {k: v.copy() for k, v in p.named_tensors().items()}
    fine_tune(p, [["s0", "s1"]] * 4, [["t1", "t0"]] * 4,
              TrainConfig.desk(**dict(TINY, hidden_size=5, embed_size=4)))
    for name, arr in p.named_tensors().items():
        assert np.array_equal(arr, before[name])


def test_cross_entropy_consistent_with_batch_loss():
    p = small_params(4)
    enc = encode(p, [4])
    lp, _ = decode_step(p, initial_decoder(p), enc)
    loss, _ = softmax_cross_entropy(lp, 2)
    assert loss == pytest.approx(-lp[2], rel=1e-12)


@pytest.mark.slow
def test_loss_decreases(copy_model):
    assert len(copy_model.losses) == copy_model.cfg.epochs
    assert copy_model.losses[-1] < copy_model.losses[0]


@pytest.mark.slow
def test_fine_tune_on_same_corpus_keeps_quality(copy_model):
    p = copy_model.params
    before = corpus_bleu([translate_tokens(p, s) for s in copy_model.dev_src],
                         copy_model.dev_tgt)
    tuned = fine_tune(p, copy_model.src, copy_model.tgt)
    after = corpus_bleu([translate_tokens(tuned, s) for s in copy_model.dev_src],
                        copy_model.dev_tgt)
    assert after >= before - 0.01
