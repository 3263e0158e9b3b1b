import os
import subprocess
import sys

import pytest

from vropt import cli
from vropt.diag import read_trace


def _run(*argv):
    return cli.main(list(argv))


def test_run_writes_deterministic_trace(tmp_path):
    out1 = str(tmp_path / "a.csv")
    out2 = str(tmp_path / "b.csv")
    base = ["run", "--data", "synth:toyclass", "--l2", "0.1",
            "--method", "saga", "--epochs", "3", "--seed", "1"]
    assert _run(*base, "--out", out1) == 0
    assert _run(*base, "--out", out2) == 0
    with open(out1, "rb") as f1, open(out2, "rb") as f2:
        assert f1.read() == f2.read()
    recs, meta = read_trace(out1)
    assert meta["method"] == "saga"
    assert meta["gamma"]  # resolved default goes into the header
    assert len(recs) == 4
    assert all(r.time_s is None for r in recs)


def test_run_stdout_when_no_out(capsys):
    assert _run("run", "--data", "synth:tiny", "--l2", "0.1",
                "--method", "gd", "--epochs", "1") == 0
    text = capsys.readouterr().out
    recs, meta = read_trace(text)
    assert len(recs) == 2 and meta["method"] == "gd"


def test_run_times_flag(tmp_path):
    out = str(tmp_path / "t.csv")
    assert _run("run", "--data", "synth:tiny", "--l2", "0.1", "--method", "gd",
                "--epochs", "1", "--out", out, "--times") == 0
    recs, _ = read_trace(out)
    assert any(r.time_s is not None for r in recs)


def test_epochs_zero_row(tmp_path):
    out = str(tmp_path / "z.csv")
    assert _run("run", "--data", "synth:tiny", "--l2", "0.1",
                "--method", "saga", "--epochs", "0", "--out", out) == 0
    recs, _ = read_trace(out)
    assert len(recs) == 1 and recs[0].grad_evals == 0


def test_usage_exit_codes(capsys, tmp_path):
    assert _run("run", "--data", "synth:tiny", "--method", "sgd_star",
                "--gamma", "0.1") == 1  # no --xstar
    assert _run("run", "--data", "synth:nothere", "--method", "gd") == 1
    assert _run("run", "--data", "synth:tiny", "--method", "sgd",
                "--gamma", "0.1", "--stop", "loss:1") == 1
    assert _run("run", "--data", "synth:tiny", "--method", "sgd") == 1  # no gamma
    with pytest.raises(SystemExit) as exc:
        _run("run", "--data", "synth:tiny", "--method", "nope")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        _run("run", "--data", "synth:tiny", "--method", "sgd",
             "--gamma", "0.1", "--gamma-policy", "theory")
    assert exc.value.code == 1
    capsys.readouterr()


def test_io_exit_codes(tmp_path, capsys):
    assert _run("run", "--data", "/definitely/missing.libsvm", "--method", "gd") == 2
    err = capsys.readouterr().err
    assert "/definitely/missing.libsvm" in err
    out = str(tmp_path / "no" / "such" / "dir" / "t.csv")
    assert _run("run", "--data", "synth:tiny", "--l2", "0.1", "--method", "gd",
                "--epochs", "1", "--out", out) == 2


def test_divergence_exit_code(tmp_path, capsys):
    out = str(tmp_path / "d.csv")
    rc = _run("run", "--data", "synth:toyclass", "--l2", "0.1", "--method", "sgd",
              "--gamma", "1e6", "--epochs", "5", "--out", out)
    assert rc == 3
    recs, meta = read_trace(out)
    assert "diverged" in meta
    assert len(recs) >= 1


def test_solve_ref_idempotent(tmp_path, monkeypatch):
    monkeypatch.setenv("VROPT_CACHE", str(tmp_path / "cache"))
    prefix = str(tmp_path / "ref")
    args = ["solve-ref", "--data", "synth:toyclass", "--l2", "0.1", "--out", prefix]
    assert _run(*args) == 0
    with open(prefix + ".xstar.vec", "rb") as fh:
        first = fh.read()
    assert _run(*args) == 0  # cache hit, same bytes
    with open(prefix + ".xstar.vec", "rb") as fh:
        assert fh.read() == first
    assert os.path.exists(prefix + ".fstar.txt")


def test_compare_grid(tmp_path):
    outdir = str(tmp_path / "grid")
    spec = tmp_path / "cmp.spec"
    spec.write_text(
        "data = synth:toyclass\nloss = logistic\nl2 = 0.1\nepochs = 3\n"
        "seeds = 0 1\nout = %s\n\n[method]\nname = gd\n\n[method]\nname = saga\n"
        % outdir
    )
    assert _run("compare", str(spec)) == 0
    names = sorted(os.listdir(outdir))
    assert names == ["gd_seed0.csv", "gd_seed1.csv", "saga_seed0.csv",
                     "saga_seed1.csv", "summary.csv"]
    with open(os.path.join(outdir, "summary.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("label,method,seed")
    assert len(lines) == 5
    # subopt column filled from the internal reference solve
    assert all(line.split(",")[4] for line in lines[1:])


def test_compare_spec_errors(tmp_path, capsys):
    bad = tmp_path / "bad.spec"
    bad.write_text("data = synth:tiny\nout = o\n[method]\nname = nope\n")
    assert _run("compare", str(bad)) == 1
    assert "valid:" in capsys.readouterr().err
    empty = tmp_path / "empty.spec"
    empty.write_text("data = synth:tiny\nout = o\n")
    assert _run("compare", str(empty)) == 1
    assert _run("compare", str(tmp_path / "missing.spec")) == 2
    dup = tmp_path / "dup.spec"
    dup.write_text("data = synth:tiny\nout = o\n[method]\nname = gd\n[method]\nname = gd\n")
    assert _run("compare", str(dup)) == 1
    assert "label" in capsys.readouterr().err


def test_trace2d(tmp_path, capsys):
    prefix = str(tmp_path / "tr")
    rc = _run("trace2d", "--data", "synth:blobs2d", "--l2", "0.1", "--method", "sag",
              "--gamma-policy", "theory", "--epochs", "2", "--out", prefix,
              "--grid", "11")
    assert rc == 0
    with open(prefix + ".iterates.csv") as fh:
        ilines = fh.read().splitlines()
    body = [l for l in ilines if not l.startswith("#")]
    assert body[0] == "k,x1,x2"
    assert len(body) > 100
    with open(prefix + ".grid.csv") as fh:
        glines = [l for l in fh.read().splitlines() if not l.startswith("#")]
    assert glines[0] == "x1,x2,f"
    assert len(glines) == 1 + 11 * 11
    assert _run("trace2d", "--data", "synth:toyclass", "--l2", "0.1",
                "--method", "sag", "--gamma", "0.1", "--out", prefix) == 1
    capsys.readouterr()


def test_validate_only(capsys):
    assert _run("validate", "--only", "table_mean_identity") == 0
    out = capsys.readouterr().out
    assert "PASS table_mean_identity" in out
    assert "passed 1/1" in out
    assert _run("validate", "--only", "bogus_check") == 1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "vropt.cli", "run", "--data", "synth:tiny",
         "--l2", "0.1", "--method", "gd", "--epochs", "1"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "epoch,grad_evals" in proc.stdout
