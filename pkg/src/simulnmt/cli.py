"""Command-line entry point: ``simulnmt <subcommand> ...``.

Every subcommand writes its outputs atomically plus a JSON run manifest
next to the primary output (``<output>.manifest.json``). Exit codes: 0 ok,
1 runtime failure, 2 usage error, 3 no feasible agent.
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from importlib.metadata import PackageNotFoundError, version

from . import checkpoint as ckpt_mod
from .agents import AGENT_FORMS, parse_agent
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import (SYNTHETIC_TASKS, addm_corpus, chunk_corpus, format_corpus,
                   gen_synthetic, read_alignments, read_corpus, write_alignments,
                   write_corpus, write_text_atomic)
from .errors import NoFeasibleAgentError
from .metrics import evaluate_agent
from .model import translate
from .numerics import TrainConfig
from .stream import chunk_decode, chunk_events, format_trace_log, run_stream
from .training import fine_tune, train_full
from .tuning import grid_json, grid_tsv, tune_static_rw


EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3


def _pkg_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _agent_arg(text):
    try:
        return parse_agent(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid agent {text!r}; valid forms: {AGENT_FORMS}") from None


def _range_arg(text):
    """``"1-6"`` or ``"1,2,4"`` -> list of ints."""
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use 1-6 or 1,2,4") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"range {text!r} must be non-empty and positive")
    return values


def _resolve_config(args):
    if args.config == "paper":
        cfg = TrainConfig.paper()
    elif args.config == "desk":
        cfg = TrainConfig.desk()
    else:
        with open(args.config, encoding="utf-8") as fh:
            cfg = TrainConfig.from_dict(json.load(fh))
    overrides = {
        "epochs": args.epochs, "learning_rate": args.lr, "decay_rate": args.decay,
        "decay_start": args.decay_start, "dropout": args.dropout,
        "hidden_size": args.hidden, "embed_size": args.embed,
        "batch_size": args.batch_size, "seed": args.seed, "max_vocab": args.max_vocab,
    }
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _write_manifest(path, args, started, outputs, **extra):
    manifest = {
        "subcommand": args.command,
        "flags": {k: _jsonable(v) for k, v in sorted(vars(args).items())
                  if k not in ("func", "command")},
        "outputs": outputs,
        "versions": {"package": _pkg_version(), "checkpoint_format": ckpt_mod.VERSION},
        "wall_clock_seconds": round(time.monotonic() - started, 3),
    }
    manifest.update(extra)
    write_text_atomic(path + ".manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, tuple) and v and v[0] == "chunk":
        return f"chunk:{v[1]}"
    if hasattr(v, "describe"):
        return v.describe()
    return v


def _agent_record(agent):
    if isinstance(agent, tuple):
        return {"kind": "CHUNK", "N": agent[1]}
    rec = {"kind": agent.kind}
    if agent.kind == "STATIC_RW":
        rec.update(S=agent.S, RW=agent.RW)
    return rec


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args, started):
    cfg = _resolve_config(args)
    src, tgt = read_corpus(args.src), read_corpus(args.tgt)

    def report(epoch, loss, lr):
        print(f"epoch {epoch}\tlr {lr:.6g}\tloss {loss:.6f}", flush=True)

    params = train_full(src, tgt, cfg, callback=report)
    save_checkpoint(args.out, Checkpoint(params, cfg))
    _write_manifest(args.out, args, started, [args.out], config=cfg.to_dict(),
                    seeds={"train": cfg.seed})
    return EXIT_OK


def cmd_fine_tune(args, started):
    base = load_checkpoint(args.model)
    cfg = TrainConfig.fine_tune_default(base.config)
    overrides = {"epochs": args.epochs, "learning_rate": args.lr, "seed": args.seed}
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})

    def report(epoch, loss, lr):
        print(f"epoch {epoch}\tlr {lr:.6g}\tloss {loss:.6f}", flush=True)

    params = fine_tune(base.params, read_corpus(args.src), read_corpus(args.tgt), cfg, report)
    save_checkpoint(args.out, Checkpoint(params, cfg))
    _write_manifest(args.out, args, started, [args.out], config=cfg.to_dict(),
                    seeds={"fine_tune": cfg.seed})
    return EXIT_OK


def cmd_decode(args, started):
    params = load_checkpoint(args.model).params
    outs = []
    for src in read_corpus(args.input):
        ids = translate(params, params.src_vocab.encode(src), args.beam)
        outs.append([params.tgt_vocab.token(t) for t in ids])
    write_text_atomic(args.output, format_corpus(outs))
    _write_manifest(args.output, args, started, [args.output])
    return EXIT_OK


def cmd_stream_decode(args, started):
    params = load_checkpoint(args.model).params
    agent = args.agent
    outs, logs = [], []
    for src in read_corpus(args.input):
        ids = params.src_vocab.encode(src)
        if not ids:
            outs.append([])
            logs.append("")
            continue
        if isinstance(agent, tuple):
            out, trace = chunk_decode(params, ids, agent[1], args.beam)
            events = chunk_events(len(ids), agent[1], out, trace)
            logs.append(format_trace_log(events, params.tgt_vocab))
        else:
            session = run_stream(params, agent, ids, args.beam)
            out = session.t_committed
            logs.append(format_trace_log(session.events, params.tgt_vocab))
        outs.append([params.tgt_vocab.token(t) for t in out])
    write_text_atomic(args.output, format_corpus(outs))
    outputs = [args.output]
    if args.trace_out:
        write_text_atomic(args.trace_out, "\n".join(logs))
        outputs.append(args.trace_out)
    _write_manifest(args.output, args, started, outputs, agent=_agent_record(agent))
    return EXIT_OK


def cmd_tune(args, started):
    params = load_checkpoint(args.model).params
    dev_src, dev_ref = read_corpus(args.dev_src), read_corpus(args.dev_ref)
    code = EXIT_OK
    chosen = None
    try:
        S, RW, grid = tune_static_rw(params, dev_src, dev_ref, args.s_range, args.rw_range,
                                     args.ap_max, args.beam, args.jobs)
        chosen = {"S": S, "RW": RW}
        print(f"static:{S},{RW}")
    except NoFeasibleAgentError as exc:
        grid = exc.grid
        code = EXIT_INFEASIBLE
        print(f"error: {exc}", file=sys.stderr)
    write_text_atomic(args.grid_out, grid_tsv(grid))
    write_text_atomic(args.grid_out + ".json", grid_json(grid) + "\n")
    _write_manifest(args.grid_out, args, started, [args.grid_out, args.grid_out + ".json"],
                    chosen=chosen)
    return code


def cmd_evaluate(args, started):
    params = load_checkpoint(args.model).params
    res = evaluate_agent(params, args.agent, read_corpus(args.src), read_corpus(args.ref),
                         args.beam)
    text = res.to_json()
    print(text)
    write_text_atomic(args.out, text + "\n")
    outputs = [args.out]
    if args.per_sentence:
        write_text_atomic(args.per_sentence, res.per_sentence_tsv())
        outputs.append(args.per_sentence)
    _write_manifest(args.out, args, started, outputs, agent=_agent_record(args.agent))
    return EXIT_OK


def cmd_gen_chunks(args, started):
    src, tgt = read_corpus(args.src), read_corpus(args.tgt)
    pairs = chunk_corpus(src, tgt, read_alignments(args.align), args.n)
    write_corpus(args.out_src, [p[0] for p in pairs])
    write_corpus(args.out_tgt, [p[1] for p in pairs])
    _write_manifest(args.out_src, args, started, [args.out_src, args.out_tgt],
                    n_pairs=len(pairs))
    return EXIT_OK


def cmd_gen_addm(args, started):
    src, tgt = read_corpus(args.src), read_corpus(args.tgt)
    pairs = addm_corpus(src, tgt, read_alignments(args.align), args.n, args.m)
    write_corpus(args.out_src, [p.source for p in pairs])
    write_corpus(args.out_tgt, [p.target for p in pairs])
    _write_manifest(args.out_src, args, started, [args.out_src, args.out_tgt],
                    n_pairs=len(pairs), N=args.n, M=args.m)
    return EXIT_OK


def cmd_gen_synth(args, started):
    src, tgt, align = gen_synthetic(args.task, args.n, args.vocab, args.len_min,
                                    args.len_max, args.seed)
    paths = [args.out_prefix + ext for ext in (".src", ".tgt", ".align")]
    write_corpus(paths[0], src)
    write_corpus(paths[1], tgt)
    write_alignments(paths[2], align)
    _write_manifest(args.out_prefix, args, started, paths, seeds={"synthetic": args.seed})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="simulnmt", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model on full sentence pairs")
    t.add_argument("--src", required=True)
    t.add_argument("--tgt", required=True)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--config", default="desk", help="desk, paper, or a JSON file")
    for flag, typ in (("--epochs", int), ("--lr", float), ("--decay", float),
                      ("--decay-start", int), ("--dropout", float), ("--hidden", int),
                      ("--embed", int), ("--batch-size", int), ("--seed", int),
                      ("--max-vocab", int)):
        t.add_argument(flag, type=typ)
    t.set_defaults(func=cmd_train)

    f = sub.add_parser("fine-tune", help="continue training an existing model")
    f.add_argument("--model", required=True)
    f.add_argument("--src", required=True)
    f.add_argument("--tgt", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--epochs", type=int)
    f.add_argument("--lr", type=float)
    f.add_argument("--seed", type=int)
    f.set_defaults(func=cmd_fine_tune)

    d = sub.add_parser("decode", help="offline decoding of complete sentences")
    d.add_argument("--model", required=True)
    d.add_argument("--input", required=True)
    d.add_argument("--output", required=True)
    d.add_argument("--beam", type=int, default=1)
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("stream-decode", help="incremental decoding under an agent")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--agent", required=True, type=_agent_arg, help=AGENT_FORMS)
    s.add_argument("--beam", type=int, default=1)
    s.add_argument("--trace-out")
    s.set_defaults(func=cmd_stream_decode)

    u = sub.add_parser("tune", help="grid-search STATIC-RW under an AP budget")
    u.add_argument("--model", required=True)
    u.add_argument("--dev-src", required=True)
    u.add_argument("--dev-ref", required=True)
    u.add_argument("--s-range", type=_range_arg, default=_range_arg("1-6"))
    u.add_argument("--rw-range", type=_range_arg, default=_range_arg("1-4"))
    u.add_argument("--ap-max", type=float, default=0.75)
    u.add_argument("--beam", type=int, default=1)
    u.add_argument("--jobs", type=int, default=1)
    u.add_argument("--grid-out", required=True)
    u.set_defaults(func=cmd_tune)

    e = sub.add_parser("evaluate", help="BLEU and AP of one agent")
    e.add_argument("--model", required=True)
    e.add_argument("--agent", required=True, type=_agent_arg, help=AGENT_FORMS)
    e.add_argument("--src", required=True)
    e.add_argument("--ref", required=True)
    e.add_argument("--beam", type=int, default=1)
    e.add_argument("--out", required=True, help="JSON result path")
    e.add_argument("--per-sentence", help="optional per-sentence TSV path")
    e.set_defaults(func=cmd_evaluate)

    for name, func, help_ in (("gen-chunks", cmd_gen_chunks, "chunk training pairs"),
                              ("gen-addm", cmd_gen_addm, "growing-prefix training pairs")):
        g = sub.add_parser(name, help=help_)
        g.add_argument("--src", required=True)
        g.add_argument("--tgt", required=True)
        g.add_argument("--align", required=True)
        g.add_argument("--n", type=int, default=6)
        if name == "gen-addm":
            g.add_argument("--m", type=int, default=1)
        g.add_argument("--out-src", required=True)
        g.add_argument("--out-tgt", required=True)
        g.set_defaults(func=func)

    y = sub.add_parser("gen-synth", help="synthetic parallel corpus")
    y.add_argument("--task", choices=SYNTHETIC_TASKS, required=True)
    y.add_argument("--n", type=int, default=2000)
    y.add_argument("--vocab", type=int, default=20)
    y.add_argument("--len-min", type=int, default=4)
    y.add_argument("--len-max", type=int, default=8)
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--out-prefix", required=True,
                   help="writes PREFIX.src, PREFIX.tgt and PREFIX.align")
    y.set_defaults(func=cmd_gen_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.monotonic()
    try:
        return args.func(args, started)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
