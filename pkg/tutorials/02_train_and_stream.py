# %% [markdown]
# # Training a toy model and decoding a stream
#
# A copy task (target = source) trains in seconds at desk scale and makes
# the incremental decoder easy to inspect. The source arrives one token at a
# time; after each READ an agent decides how many words to WRITE.

# %%
import time

from simulnmt import (AgentState, TrainConfig, run_stream, static_rw, train_full,
                      translate)
from simulnmt.data import gen_synthetic
from simulnmt.stream import format_trace_log

src, tgt, _ = gen_synthetic("copy", 2000, 20, 4, 8, seed=0)
t0 = time.perf_counter()
params = train_full(src, tgt, TrainConfig.desk(),
                    callback=lambda e, loss, lr: print(f"epoch {e:2d} lr {lr:.3g} loss {loss:.3f}"))
print(f"trained in {time.perf_counter() - t0:.1f}s")

# %% [markdown]
# Offline decoding sees the whole sentence at once.

# %%
sentence = ["w4", "w11", "w0", "w7", "w7", "w19"]
ids = params.src_vocab.encode(sentence)
print("offline:", params.tgt_vocab.decode(translate(params, ids)))

# %% [markdown]
# Wait-until-end (WUE) commits nothing until the source is complete, so its
# output matches offline decoding and every word is stamped with the full
# source length. A static schedule of 2 startup READs, then 1 WRITE per READ,
# commits much earlier.

# %%
for agent in (AgentState("WUE"), AgentState("WID"), static_rw(2, 1)):
    session = run_stream(params, agent, ids)
    words = params.tgt_vocab.decode(session.t_committed)
    print(f"{agent.describe():12s} {' '.join(words):30s} trace {session.trace}")

# %% [markdown]
# The event log records every READ and WRITE: event, source tokens read,
# words committed so far, and the words written.

# %%
session = run_stream(params, static_rw(2, 1), ids)
print(format_trace_log(session.events, params.tgt_vocab))

# %% [markdown]
# Checkpoints store the weights as little-endian float32 next to a JSON
# manifest, and reload bit for bit.

# %%
import os
import tempfile

from simulnmt import Checkpoint, load_checkpoint, save_checkpoint

path = os.path.join(tempfile.mkdtemp(), "copy.ckpt")
save_checkpoint(path, Checkpoint(params, TrainConfig.desk()))
back = load_checkpoint(path)
same = all((back.params.named_tensors()[k] == v).all()
           for k, v in params.named_tensors().items())
print(f"{os.path.getsize(path)} bytes, identical after reload: {same}")
