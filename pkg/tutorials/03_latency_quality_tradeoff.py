# %% [markdown]
# # Latency against quality
#
# Average Proportion (AP) measures how much of the source had been read,
# on average, when each target word was committed. WUE sits at AP = 1.
# Lower AP means lower latency, and usually some loss in BLEU when the
# target depends on source words that have not arrived yet.
#
# Reversal is the extreme case: the first target word is the last source
# word, so committing early is guesswork.

# %%
from simulnmt import AgentState, TrainConfig, evaluate_agent, static_rw, train_full
from simulnmt.data import gen_synthetic
from simulnmt.tuning import grid_tsv, tune_static_rw

results = {}
for task in ("copy", "reverse"):
    src, tgt, _ = gen_synthetic(task, 2000, 20, 4, 8, seed=0)
    dev_src, dev_tgt, _ = gen_synthetic(task, 200, 20, 4, 8, seed=1)
    params = train_full(src, tgt, TrainConfig.desk())
    print(f"\n{task}")
    for agent in (AgentState("WUE"), AgentState("WIW"), AgentState("WID"),
                  static_rw(1, 1), static_rw(3, 2), ("chunk", 4)):
        r = evaluate_agent(params, agent, dev_src, dev_tgt)
        ap = "  -  " if r.ap is None else f"{r.ap:.3f}"
        print(f"  {r.agent:12s} BLEU {100 * r.bleu:6.2f}  AP {ap}")
    results[task] = (params, dev_src, dev_tgt)

# %% [markdown]
# ## Choosing a static schedule
#
# `tune_static_rw` evaluates a grid of (S, RW) schedules on a dev set and
# returns the best BLEU whose AP stays within the budget.

# %%
params, dev_src, dev_tgt = results["copy"]
S, RW, grid = tune_static_rw(params, dev_src, dev_tgt, range(1, 5), range(1, 4), ap_max=0.75)
print(f"chosen: static:{S},{RW}")
print(grid_tsv(grid))
