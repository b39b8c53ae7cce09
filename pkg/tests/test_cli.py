import json

import pytest

from simulnmt.cli import main
from simulnmt.data import read_corpus


def run(argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def manifest(path):
    with open(f"{path}.manifest.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run(["gen-synth", "--task", "copy", "--n", 200, "--vocab", 8, "--len-min", 2,
                "--len-max", 5, "--seed", 0, "--out-prefix", d / "toy"]) == 0
    assert run(["train", "--src", d / "toy.src", "--tgt", d / "toy.tgt", "--out", d / "m.ckpt",
                "--epochs", 8, "--hidden", 16, "--embed", 16, "--batch-size", 8, "--dropout", 0]) == 0
    return d


def test_gen_synth_is_deterministic(tmp_path):
    for name in ("a", "b"):
        run(["gen-synth", "--task", "reverse", "--n", 10, "--seed", 3,
             "--out-prefix", tmp_path / name])
    for ext in (".src", ".tgt", ".align"):
        assert (tmp_path / f"a{ext}").read_bytes() == (tmp_path / f"b{ext}").read_bytes()
    assert manifest(tmp_path / "a")["seeds"] == {"synthetic": 3}


def test_missing_required_flag_is_usage_error(capsys):
    assert run(["train", "--tgt", "x", "--out", "y"]) == 2
    assert "--src" in capsys.readouterr().err


def test_bad_path_is_runtime_error(tmp_path, capsys):
    assert run(["train", "--src", tmp_path / "nope", "--tgt", tmp_path / "nope",
                "--out", tmp_path / "m"]) == 1
    assert "error:" in capsys.readouterr().err


def test_train_writes_manifest(workdir):
    m = manifest(workdir / "m.ckpt")
    assert m["subcommand"] == "train"
    assert m["config"]["epochs"] == 8 and m["config"]["hidden_size"] == 16
    assert m["outputs"] == [str(workdir / "m.ckpt")]
    assert "wall_clock_seconds" in m and "package" in m["versions"]


def test_paper_config_recorded(tmp_path):
    src = tmp_path / "s"
    src.write_text("a b\n")
    # override size and epochs so the run is quick; schedule values come from the preset
    code = run(["train", "--config", "paper", "--src", src, "--tgt", src, "--out", tmp_path / "m",
                "--hidden", 4, "--embed", 4])
    assert code == 0
    cfg = manifest(tmp_path / "m")["config"]
    assert (cfg["learning_rate"], cfg["decay_rate"], cfg["dropout"], cfg["epochs"]) == \
        (1.0, 0.5, 0.3, 13)


def test_stream_decode_wue_matches_offline(workdir):
    inp = workdir / "toy.src"
    assert run(["decode", "--model", workdir / "m.ckpt", "--input", inp,
                "--output", workdir / "off.txt"]) == 0
    assert run(["stream-decode", "--model", workdir / "m.ckpt", "--input", inp, "--agent", "wue",
                "--output", workdir / "wue.txt", "--trace-out", workdir / "wue.log"]) == 0
    assert (workdir / "off.txt").read_text() == (workdir / "wue.txt").read_text()
    assert len(read_corpus(workdir / "wue.txt")) == len(read_corpus(inp))
    first = (workdir / "wue.log").read_text().splitlines()[0]
    assert first.startswith("READ\t1\t0\t")


def test_stream_decode_records_static_agent(workdir):
    assert run(["stream-decode", "--model", workdir / "m.ckpt", "--input", workdir / "toy.src",
                "--agent", "static:5,2", "--output", workdir / "s.txt"]) == 0
    assert manifest(workdir / "s.txt")["agent"] == {"kind": "STATIC_RW", "S": 5, "RW": 2}


def test_stream_decode_chunk(workdir):
    assert run(["stream-decode", "--model", workdir / "m.ckpt", "--input", workdir / "toy.src",
                "--agent", "chunk:6", "--output", workdir / "c.txt",
                "--trace-out", workdir / "c.log"]) == 0
    assert manifest(workdir / "c.txt")["agent"] == {"kind": "CHUNK", "N": 6}


def test_unknown_agent_lists_forms(workdir, capsys):
    assert run(["stream-decode", "--model", workdir / "m.ckpt", "--input", workdir / "toy.src",
                "--agent", "wait3", "--output", workdir / "x"]) == 2
    assert "static:S,RW" in capsys.readouterr().err


def test_tune_infeasible_exit_code(workdir):
    grid = workdir / "grid.tsv"
    code = run(["tune", "--model", workdir / "m.ckpt", "--dev-src", workdir / "toy.src",
                "--dev-ref", workdir / "toy.tgt", "--s-range", "1-2", "--rw-range", "1",
                "--ap-max", 0.01, "--grid-out", grid])
    assert code == 3
    assert len(grid.read_text().splitlines()) == 3
    assert manifest(grid)["chosen"] is None


def test_tune_feasible(workdir, capsys):
    grid = workdir / "grid2.tsv"
    code = run(["tune", "--model", workdir / "m.ckpt", "--dev-src", workdir / "toy.src",
                "--dev-ref", workdir / "toy.tgt", "--s-range", "1,2", "--rw-range", "1-2",
                "--ap-max", 1.0, "--grid-out", grid])
    assert code == 0
    chosen = manifest(grid)["chosen"]
    assert capsys.readouterr().out.strip() == f"static:{chosen['S']},{chosen['RW']}"
    assert len(json.loads((workdir / "grid2.tsv.json").read_text())) == 4


def test_evaluate_json(workdir):
    out = workdir / "eval.json"
    assert run(["evaluate", "--model", workdir / "m.ckpt", "--agent", "wue",
                "--src", workdir / "toy.src", "--ref", workdir / "toy.tgt", "--out", out,
                "--per-sentence", workdir / "eval.tsv"]) == 0
    res = json.loads(out.read_text())
    assert res["ap"] == 1.0 and res["agent"] == "wue"
    assert len((workdir / "eval.tsv").read_text().splitlines()) == 201


def test_gen_addm_defaults(workdir):
    out = workdir / "addm"
    assert run(["gen-addm", "--src", workdir / "toy.src", "--tgt", workdir / "toy.tgt",
                "--align", workdir / "toy.align", "--out-src", f"{out}.src",
                "--out-tgt", f"{out}.tgt"]) == 0
    m = manifest(f"{out}.src")
    assert (m["N"], m["M"]) == (6, 1)


def test_gen_chunks_fourteen_tokens(tmp_path):
    line = " ".join(f"w{k}" for k in range(14)) + "\n"
    (tmp_path / "s").write_text(line)
    (tmp_path / "a").write_text(" ".join(f"{k}-{k}" for k in range(14)) + "\n")
    assert run(["gen-chunks", "--src", tmp_path / "s", "--tgt", tmp_path / "s",
                "--align", tmp_path / "a", "--n", 6, "--out-src", tmp_path / "cs",
                "--out-tgt", tmp_path / "ct"]) == 0
    assert [len(s) for s in read_corpus(tmp_path / "cs")] == [6, 6, 2]
    assert manifest(tmp_path / "cs")["n_pairs"] == 3


def test_fine_tune(workdir):
    out = workdir / "ft.ckpt"
    assert run(["fine-tune", "--model", workdir / "m.ckpt", "--src", workdir / "toy.src",
                "--tgt", workdir / "toy.tgt", "--out", out, "--epochs", 1]) == 0
    assert manifest(out)["config"]["epochs"] == 1


def test_same_flags_give_identical_outputs(workdir, tmp_path):
    outs = []
    for name in ("a", "b"):
        run(["train", "--src", workdir / "toy.src", "--tgt", workdir / "toy.tgt",
             "--out", tmp_path / name, "--epochs", 1, "--hidden", 8, "--embed", 8])
        run(["stream-decode", "--model", tmp_path / name, "--input", workdir / "toy.src",
             "--agent", "wid", "--output", tmp_path / f"{name}.out"])
        outs.append(((tmp_path / name).read_bytes(), (tmp_path / f"{name}.out").read_bytes()))
    assert outs[0] == outs[1]
