# %% [markdown]
# # Adapting a model to partial input
#
# A model trained on full sentences behaves poorly when it is handed
# fragments. Word alignments let us cut training pairs into matching
# pieces.
#
# * Chunk pairs: consecutive N-token source chunks with the target span
#   their alignments point into.
# * Growing-prefix pairs: source prefixes of length N, N+M, ... with the
#   longest target prefix fully explained by that source prefix.

# %%
from simulnmt import TrainConfig, evaluate_agent, fine_tune, train_full
from simulnmt.data import addm_corpus, chunk_corpus, chunk_spans, gen_synthetic

# a crossing alignment: target word 1 comes from source word 2
print(chunk_spans(4, 4, {(0, 0), (1, 2), (2, 1), (3, 3)}, 2))

# %% [markdown]
# The shift task rotates each sentence right by one, so the first target
# word is the last source word. Chunk decoding with N=4 breaks that link
# at every chunk boundary. Fine-tuning on chunk pairs teaches the model
# to translate each fragment on its own terms.

# %%
src, tgt, align = gen_synthetic("shift", 2000, 20, 4, 8, seed=0)
dev_src, dev_tgt, _ = gen_synthetic("shift", 200, 20, 4, 8, seed=1)
base = train_full(src, tgt, TrainConfig.desk())
before = evaluate_agent(base, ("chunk", 4), dev_src, dev_tgt)

pairs = chunk_corpus(src, tgt, align, 4)
tuned = fine_tune(base, [s for s, _ in pairs], [t for _, t in pairs])
after = evaluate_agent(tuned, ("chunk", 4), dev_src, dev_tgt)
print(f"{len(pairs)} chunk pairs")
print(f"chunk:4 BLEU before {100 * before.bleu:.2f}, after {100 * after.bleu:.2f}")

# %% [markdown]
# Growing prefixes with the default N=6, M=1: an 8-word sentence yields
# prefixes of 6, 7 and 8 source words. On the shift task every partial
# prefix is dropped, since the first target word is aligned to the last
# source word. A monotone corpus shows the target prefixes growing in step.

# %%
mono_src, mono_tgt, mono_align = gen_synthetic("copy", 20, 20, 6, 8, seed=3)
print("shift pairs:", len(addm_corpus(src[:50], tgt[:50], align[:50])),
      "for 50 sentences")
for p in addm_corpus(mono_src, mono_tgt, mono_align, n=6, m=1)[:6]:
    print(p.sentence_id, p.prefix_length, " ".join(p.source), "->", " ".join(p.target))
