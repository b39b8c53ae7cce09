"""Teacher-forced training of :class:`~simulnmt.model.Seq2SeqParams`.

Mini-batches are padded to a common length; the loss is the summed token
cross-entropy divided by the batch size. Gradients are computed by hand with
truncation-free BPTT through both LSTM stacks.
"""

import logging

import numpy as np

from .errors import InputError
from .model import init_params
from .numerics import TrainConfig, log_softmax, lstm_cell_backward, lstm_cell_step, sgd_step
from .vocab import BOS_ID, EOS_ID, PAD_ID, build_vocab

log = logging.getLogger(__name__)


def pad_batch(src_ids, tgt_ids):
    """Pad id sequences into ``(src, src_mask, tgt_in, tgt_out, tgt_mask)``."""
    B = len(src_ids)
    Ls = max(len(s) for s in src_ids)
    Lt = max(len(t) for t in tgt_ids) + 1
    src = np.full((B, Ls), PAD_ID, dtype=np.int64)
    tgt_in = np.full((B, Lt), PAD_ID, dtype=np.int64)
    tgt_out = np.full((B, Lt), PAD_ID, dtype=np.int64)
    for b, (s, t) in enumerate(zip(src_ids, tgt_ids)):
        src[b, :len(s)] = s
        tgt_in[b, :len(t) + 1] = [BOS_ID] + list(t)
        tgt_out[b, :len(t) + 1] = list(t) + [EOS_ID]
    src_mask = np.zeros((B, Ls), dtype=bool)
    tgt_mask = np.zeros((B, Lt), dtype=bool)
    for b, (s, t) in enumerate(zip(src_ids, tgt_ids)):
        src_mask[b, :len(s)] = True
        tgt_mask[b, :len(t) + 1] = True
    return src, src_mask, tgt_in, tgt_out, tgt_mask


def _dropout_mask(rng, rate, shape, dtype):
    if rate == 0 or rng is None:
        return None
    keep = 1.0 - rate
    return ((rng.random(shape) < keep) / keep).astype(dtype)


def _stack_forward(layers, X, rate, rng):
    """Run stacked LSTMs over ``X`` (B, T, in); dropout between layers."""
    B, T, _ = X.shape
    caches, masks = [], []
    inp = X
    for k, layer in enumerate(layers):
        mask = None
        if k > 0:
            mask = _dropout_mask(rng, rate, inp.shape, inp.dtype)
            if mask is not None:
                inp = inp * mask
        H = layer.hidden_size
        h = np.zeros((B, H), dtype=X.dtype)
        c = np.zeros((B, H), dtype=X.dtype)
        outs = np.empty((B, T, H), dtype=X.dtype)
        step_caches = []
        for t in range(T):
            h, c, cache = lstm_cell_step(inp[:, t], h, c, layer)
            outs[:, t] = h
            step_caches.append(cache)
        caches.append(step_caches)
        masks.append(mask)
        inp = outs
    return inp, caches, masks


def _stack_backward(layers, dout, caches, masks):
    """BPTT through the stack; returns ``(dX, per-layer grads)``."""
    grads = [None] * len(layers)
    for k in reversed(range(len(layers))):
        layer = layers[k]
        B, T, H = dout.shape
        din = np.empty((B, T, layer.input_size), dtype=dout.dtype)
        dh_next = np.zeros((B, H), dtype=dout.dtype)
        dc_next = np.zeros((B, H), dtype=dout.dtype)
        gWx = np.zeros_like(layer.input_weights)
        gWh = np.zeros_like(layer.recurrent_weights)
        gb = np.zeros_like(layer.bias)
        for t in reversed(range(T)):
            dx, dh_next, dc_next, g = lstm_cell_backward(
                dout[:, t] + dh_next, dc_next, caches[k][t], layer)
            din[:, t] = dx
            gWx += g.input_weights
            gWh += g.recurrent_weights
            gb += g.bias
        grads[k] = (gWx, gWh, gb)
        if masks[k] is not None:
            din = din * masks[k]
        dout = din
    return dout, grads


def batch_loss(params, src_ids, tgt_ids, dropout=0.0, rng=None):
    """Loss (summed token NLL / batch size) and gradients for one batch.

    Returns ``(loss, grads, n_tokens, total_nll)`` where ``grads`` is keyed
    like :meth:`Seq2SeqParams.named_tensors`.
    """
    dtype = params.dtype
    src, src_mask, tgt_in, tgt_out, tgt_mask = pad_batch(src_ids, tgt_ids)
    B = src.shape[0]

    # forward
    enc_top, enc_caches, enc_masks = _stack_forward(
        params.encoder, params.src_embedding[src], dropout, rng)
    dec_top, dec_caches, dec_masks = _stack_forward(
        params.decoder, params.tgt_embedding[tgt_in], dropout, rng)
    scores = np.einsum("bth,bsh->bts", dec_top, enc_top)
    scores = np.where(src_mask[:, None, :], scores, -np.inf)
    scores = scores - scores.max(axis=-1, keepdims=True)
    A = np.exp(scores)
    A /= A.sum(axis=-1, keepdims=True)
    context = np.einsum("bts,bsh->bth", A, enc_top)
    cat = np.concatenate([context, dec_top], axis=-1)
    attn_h = np.tanh(cat @ params.attn_proj.T)
    out_mask = _dropout_mask(rng, dropout, attn_h.shape, dtype)
    attn_d = attn_h * out_mask if out_mask is not None else attn_h
    logp = log_softmax(attn_d @ params.out_proj.T)
    nll = -np.take_along_axis(logp, tgt_out[..., None], axis=-1)[..., 0]
    total_nll = float(np.sum(nll * tgt_mask))
    loss = total_nll / B

    # backward
    dlogits = np.exp(logp)
    np.put_along_axis(dlogits, tgt_out[..., None],
                      np.take_along_axis(dlogits, tgt_out[..., None], axis=-1) - 1, axis=-1)
    dlogits *= (tgt_mask / B).astype(dtype)[..., None]
    g_out = np.einsum("btv,bth->vh", dlogits, attn_d)
    d_attn = dlogits @ params.out_proj
    if out_mask is not None:
        d_attn = d_attn * out_mask
    dpre = d_attn * (1.0 - attn_h * attn_h)
    g_attn = np.einsum("bth,btk->hk", dpre, cat)
    dcat = dpre @ params.attn_proj
    H = params.hidden_size
    dctx, ddec = dcat[..., :H], dcat[..., H:].copy()
    dA = np.einsum("bth,bsh->bts", dctx, enc_top)
    denc = np.einsum("bts,bth->bsh", A, dctx)
    dscores = A * (dA - np.sum(A * dA, axis=-1, keepdims=True))
    ddec += np.einsum("bts,bsh->bth", dscores, enc_top)
    denc += np.einsum("bts,bth->bsh", dscores, dec_top)

    d_tgt_x, dec_grads = _stack_backward(params.decoder, ddec, dec_caches, dec_masks)
    d_src_x, enc_grads = _stack_backward(params.encoder, denc, enc_caches, enc_masks)
    g_src = np.zeros_like(params.src_embedding)
    np.add.at(g_src, src, d_src_x)
    g_tgt = np.zeros_like(params.tgt_embedding)
    np.add.at(g_tgt, tgt_in, d_tgt_x)

    grads = {"src_embedding": g_src, "tgt_embedding": g_tgt}
    for side, lg in (("encoder", enc_grads), ("decoder", dec_grads)):
        for k, (gWx, gWh, gb) in enumerate(lg):
            grads[f"{side}.{k}.input_weights"] = gWx
            grads[f"{side}.{k}.recurrent_weights"] = gWh
            grads[f"{side}.{k}.bias"] = gb
    grads["attn_proj"] = g_attn
    grads["out_proj"] = g_out
    return loss, grads, int(tgt_mask.sum()), total_nll


def _check_corpora(src_corpus, tgt_corpus):
    if len(src_corpus) != len(tgt_corpus):
        raise InputError(f"parallel corpora differ in length: "
                         f"{len(src_corpus)} vs {len(tgt_corpus)}")
    if not src_corpus:
        raise InputError("training corpus is empty")


def _to_ids(params, src_corpus, tgt_corpus):
    pairs = [(params.src_vocab.encode(s), params.tgt_vocab.encode(t))
             for s, t in zip(src_corpus, tgt_corpus)]
    dropped = sum(1 for s, _ in pairs if not s)
    if dropped:
        log.warning("skipping %d pairs with an empty source side", dropped)
    return [p for p in pairs if p[0]]


def _run_epochs(params, pairs, cfg, rng, callback):
    tensors = params.named_tensors()
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_at(epoch)
        order = rng.permutation(len(pairs))
        nll = 0.0
        ntok = 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grads, n, total = batch_loss(
                params, [pairs[i][0] for i in idx], [pairs[i][1] for i in idx],
                cfg.dropout, rng)
            sgd_step(tensors, grads, lr, cfg.clip)
            nll += total
            ntok += n
        mean = nll / max(ntok, 1)
        log.info("epoch %d lr %.4g mean token loss %.4f", epoch, lr, mean)
        if callback is not None:
            callback(epoch, mean, lr)
    return params


def train_full(src_corpus, tgt_corpus, cfg=None, callback=None,
               src_vocab=None, tgt_vocab=None):
    """Train from scratch on full sentence pairs (lists of token lists).

    ``callback(epoch, mean_token_loss, lr)`` is invoked after every epoch.
    Vocabularies are built from the corpora when not supplied.
    """
    cfg = cfg or TrainConfig.desk()
    _check_corpora(src_corpus, tgt_corpus)
    src_vocab = src_vocab or build_vocab(src_corpus, cfg.max_vocab)
    tgt_vocab = tgt_vocab or build_vocab(tgt_corpus, cfg.max_vocab)
    rng = np.random.default_rng(cfg.seed)
    params = init_params(src_vocab, tgt_vocab, cfg.hidden_size, cfg.embed_size,
                         rng, scale=cfg.init_scale)
    return _run_epochs(params, _to_ids(params, src_corpus, tgt_corpus), cfg, rng, callback)


def fine_tune(params, src_corpus, tgt_corpus, cfg=None, callback=None):
    """Continue training a copy of ``params`` (defaults: 3 epochs, lr 0.1,
    no decay). The input parameters are not modified."""
    _check_corpora(src_corpus, tgt_corpus)
    if cfg is None:
        cfg = TrainConfig.fine_tune_default(TrainConfig.desk(
            hidden_size=params.hidden_size, embed_size=params.src_embedding.shape[1]))
    tuned = params.copy()
    if cfg.epochs == 0:
        return tuned
    rng = np.random.default_rng(cfg.seed)
    return _run_epochs(tuned, _to_ids(tuned, src_corpus, tgt_corpus), cfg, rng, callback)
