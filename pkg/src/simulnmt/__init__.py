"""Simultaneous translation with an incrementally built encoder and
attention, pluggable READ/WRITE agents, and latency/quality measurement."""

from .agents import AgentState, parse_agent, static_rw
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .metrics import average_proportion, corpus_bleu, evaluate_agent
from .model import Seq2SeqParams, translate
from .numerics import TrainConfig
from .stream import StreamSession, chunk_decode, run_stream
from .training import fine_tune, train_full
from .tuning import tune_static_rw
from .vocab import Vocabulary, build_vocab

__all__ = [
    "AgentState", "Checkpoint", "Seq2SeqParams", "StreamSession", "TrainConfig",
    "Vocabulary", "average_proportion", "build_vocab", "chunk_decode", "corpus_bleu",
    "evaluate_agent", "fine_tune", "load_checkpoint", "parse_agent", "run_stream",
    "save_checkpoint", "static_rw", "train_full", "translate", "tune_static_rw",
]
