"""Command-line interface: pipeline smoke test, exit codes, reproducibility."""

from pathlib import Path

import pytest

from sdparse.cli import main
from sdparse.sdp import load_sdp

CONFIG = """
# desk-scale settings for the smoke test
model.embed_dim=4
model.lstm_hidden=5
model.lstm_layers=1
model.mlp_dim=6
model.gnn_hidden=10
model.gnn_layers=2
model.lstm_dropout=0.0
model.mlp_dropout=0.0
model.gnn_dropout=0.0
train.max_epochs=2
train.patience=1
train.batch_size=8
train.min_freq=1
synth.len_min=5
synth.len_max=7
"""


def write_config(tmp_path: Path) -> Path:
    path = tmp_path / "toy.cfg"
    path.write_text(CONFIG, encoding="utf-8")
    return path


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> train -> predict once; several tests inspect the artifacts."""
    tmp_path = tmp_path_factory.mktemp("cli")
    cfg = write_config(tmp_path)
    train = tmp_path / "train.sdp"
    dev = tmp_path / "dev.sdp"
    test = tmp_path / "test.sdp"
    out = tmp_path / "run"
    assert run(
        "synth", "--out", train, "--sentences", 30, "--dev", 8, "--dev-out", dev,
        "--test", 8, "--test-out", test, "--config", cfg, "--seed", 5,
        "--no-timestamp",
    ) == 0
    assert run(
        "train", "--train", train, "--dev", dev, "--out", out, "--config", cfg,
        "--seed", 3, "--no-timestamp",
    ) == 0
    pred = tmp_path / "pred.sdp"
    assert run(
        "predict", "--model", out / "refined.ckpt", "--input", test, "--out", pred,
        "--no-timestamp",
    ) == 0
    return tmp_path


class TestPipeline:
    def test_artifacts_exist(self, pipeline):
        out = pipeline / "run"
        for name in ("vanilla.ckpt", "refined.ckpt",
                     "vanilla.metrics.tsv", "refined.metrics.tsv"):
            assert (out / name).is_file()

    def test_metrics_log_shape(self, pipeline):
        lines = (pipeline / "run" / "vanilla.metrics.tsv").read_text().splitlines()
        assert len(lines) == 2  # two epochs, no timestamp header
        for line in lines:
            fields = line.split("\t")
            assert len(fields) == 5
            float(fields[1]), float(fields[2]), float(fields[3]), float(fields[4])

    def test_prediction_aligns_with_input(self, pipeline):
        gold = load_sdp(pipeline / "test.sdp")
        pred = load_sdp(pipeline / "pred.sdp")
        assert len(gold) == len(pred)
        for (gs, _), (ps, _) in zip(gold, pred):
            assert [t.form for t in gs.tokens] == [t.form for t in ps.tokens]

    def test_eval_gold_against_itself_is_perfect(self, pipeline, capsys):
        assert run("eval", "--gold", pipeline / "test.sdp",
                   "--pred", pipeline / "test.sdp") == 0
        out = capsys.readouterr().out
        assert "F1 1.0000" in out

    def test_eval_tsv_output(self, pipeline, capsys):
        assert run("eval", "--gold", pipeline / "test.sdp",
                   "--pred", pipeline / "pred.sdp", "--tsv") == 0
        fields = capsys.readouterr().out.strip().split("\t")
        assert len(fields) == 7

    def test_buckets_partition(self, pipeline, capsys):
        assert run("buckets", "--gold", pipeline / "test.sdp",
                   "--pred", pipeline / "pred.sdp", "--width", 5) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("lo\thi")
        assert len(lines) >= 2


class TestReproducibility:
    def test_synth_twice_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        a, b = tmp_path / "a.sdp", tmp_path / "b.sdp"
        for path in (a, b):
            assert run("synth", "--out", path, "--sentences", 20, "--config", cfg,
                       "--seed", 11, "--no-timestamp") == 0
        assert a.read_bytes() == b.read_bytes()

    def test_timestamp_header_suppressed_only_by_flag(self, tmp_path):
        cfg = write_config(tmp_path)
        stamped = tmp_path / "s.sdp"
        plain = tmp_path / "p.sdp"
        assert run("synth", "--out", stamped, "--sentences", 3, "--config", cfg) == 0
        assert run("synth", "--out", plain, "--sentences", 3, "--config", cfg,
                   "--no-timestamp") == 0
        assert stamped.read_text().startswith("# generated ")
        assert not plain.read_text().startswith("#")


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self):
        assert run("eval", "--nonsense") == 1

    def test_unknown_subcommand_is_usage_error(self):
        assert run("frobnicate") == 1

    def test_missing_file_is_data_error(self, tmp_path):
        assert run("eval", "--gold", tmp_path / "nope.sdp",
                   "--pred", tmp_path / "nope.sdp") == 2

    def test_malformed_corpus_is_data_error_with_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.sdp"
        bad.write_text("1\ta\ta\tA\t-\t-\t_\n2\tb\tb\n\n", encoding="utf-8")
        cfg = tmp_path / "m.ckpt"
        assert run("eval", "--gold", bad, "--pred", bad) == 2
        err = capsys.readouterr().err
        assert "line 2" in err

    def test_bad_config_value_is_usage_error(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("train.lam=2.0\n", encoding="utf-8")
        train = tmp_path / "t.sdp"
        train.write_text("1\ta\ta\tA\t+\t-\t_\n\n", encoding="utf-8")
        assert run("train", "--train", train, "--dev", train,
                   "--out", tmp_path / "out", "--config", cfg) == 1

    def test_synth_dev_without_path_is_usage_error(self, tmp_path):
        assert run("synth", "--out", tmp_path / "x.sdp", "--sentences", 3,
                   "--dev", 2) == 1
