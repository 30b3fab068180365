"""Tests for the command line interface: config resolution, subcommands,
exit codes, reproducible output."""

import numpy as np
import pytest

from qubonet import nn
from qubonet.cli import SCHEMA, Settings, build_parser, main
from qubonet.nn import NetworkWeights
from qubonet.qubo import read_qubo, read_sampleset


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def weights_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "model.weights"
    weights = nn.train(nn.glyph_images(), seed=nn.GLYPH_TRAINING_SEED)
    nn.write_weights(weights, str(path))
    return str(path)


@pytest.fixture(scope="module")
def feature_model(tmp_path_factory):
    """Dense-only weight file plus a per-class feature file."""
    base = tmp_path_factory.mktemp("cli-features")
    rng = np.random.default_rng(18)
    weights = NetworkWeights(dense=rng.normal(size=(8, 3)))
    weights_path = base / "dense.weights"
    nn.write_weights(weights, str(weights_path))
    vectors = rng.normal(size=(3, 8))
    features_path = base / "digits.features"
    nn.write_features([0, 1, 2], vectors, str(features_path))
    return str(weights_path), str(features_path)


class TestConfigResolution:
    def test_flags_beat_config_beats_defaults(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("reads = 77\nbackend = gibbs\n# comment\n\nseed=4\n")
        args = build_parser().parse_args(
            ["sample", "--config", str(config), "--reads", "200"]
        )
        settings = Settings(args)
        assert settings.reads == 200
        assert settings.backend == "gibbs"
        assert settings.seed == 4
        assert settings.sweeps == SCHEMA["sweeps"][1]

    def test_penalty_auto(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("penalty = auto\n")
        args = build_parser().parse_args(["classify", "--config", str(config)])
        assert Settings(args).penalty is None

    def test_unknown_key_is_usage_error(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("reeds = 10\n")
        code, _, err = run(capsys, "sample", "--config", str(config))
        assert code == 1
        assert "reeds" in err

    def test_bad_value_is_usage_error(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("reads = many\n")
        code, _, err = run(capsys, "sample", "--config", str(config))
        assert code == 1
        assert "many" in err

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["transmogrify"]) == 1

    def test_missing_config_file_is_data_error(self, capsys):
        code, _, err = run(capsys, "classify", "--config", "/no/such.cfg")
        assert code == 2


class TestTrain:
    def test_writes_weights_and_reports_accuracy(self, tmp_path, capsys):
        out = tmp_path / "model.weights"
        code, stdout, _ = run(
            capsys, "train", "--weights", str(out),
            "--seed", str(nn.GLYPH_TRAINING_SEED),
        )
        assert code == 0
        assert "training accuracy 1.000000" in stdout
        assert out.exists()
        loaded = nn.read_weights(str(out))
        assert loaded.dense.shape == (5, 5)

    def test_seed_changes_weights_not_accuracy(self, tmp_path, capsys):
        a, b = tmp_path / "a.weights", tmp_path / "b.weights"
        code_a, out_a, _ = run(capsys, "train", "--weights", str(a), "--seed", "5")
        code_b, out_b, _ = run(capsys, "train", "--weights", str(b), "--seed", "0")
        assert code_a == code_b == 0
        assert "accuracy 1.000000" in out_a and "accuracy 1.000000" in out_b
        assert a.read_text() != b.read_text()

    def test_missing_glyph_file(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "train", "--weights", str(tmp_path / "w"),
            "--glyphs", "/no/such.glyphs",
        )
        assert code == 2
        assert "/no/such.glyphs" in err


class TestBuildAndSample:
    def test_build_glyph_digit(self, tmp_path, weights_file, capsys):
        qubo_path = tmp_path / "m.qubo"
        layout_path = tmp_path / "m.layout"
        code, stdout, _ = run(
            capsys, "build-qubo", "--weights", weights_file, "--digit", "2",
            "--qubo", str(qubo_path), "--layout", str(layout_path),
        )
        assert code == 0
        assert "30 nodes" in stdout
        assert read_qubo(str(qubo_path)).n == 30
        assert layout_path.exists()

    def test_build_from_feature_file(self, tmp_path, feature_model, capsys):
        weights_path, features_path = feature_model
        qubo_path = tmp_path / "f.qubo"
        code, stdout, _ = run(
            capsys, "build-qubo", "--weights", weights_path,
            "--features", features_path, "--label", "1",
            "--qubo", str(qubo_path), "--layout", str(tmp_path / "f.layout"),
        )
        assert code == 0
        assert read_qubo(str(qubo_path)).n == 11

    def test_build_without_input_choice(self, weights_file, capsys):
        code, _, err = run(capsys, "build-qubo", "--weights", weights_file)
        assert code == 1

    def test_build_with_unknown_label(self, tmp_path, feature_model, capsys):
        weights_path, features_path = feature_model
        code, _, err = run(
            capsys, "build-qubo", "--weights", weights_path,
            "--features", features_path, "--label", "7",
            "--qubo", str(tmp_path / "x.qubo"), "--layout", str(tmp_path / "x.layout"),
        )
        assert code == 2

    def test_sample_anneal_writes_sampleset(self, tmp_path, weights_file, capsys):
        qubo_path, samples_path = tmp_path / "m.qubo", tmp_path / "m.samples"
        run(
            capsys, "build-qubo", "--weights", weights_file, "--digit", "0",
            "--qubo", str(qubo_path), "--layout", str(tmp_path / "m.layout"),
        )
        code, stdout, _ = run(
            capsys, "sample", "--qubo", str(qubo_path), "--samples", str(samples_path),
            "--reads", "40", "--sweeps", "60", "--seed", "1",
        )
        assert code == 0
        assert "wrote 40 reads" in stdout
        assert read_sampleset(str(samples_path)).reads == 40

    def test_exact_backend_over_capacity(self, tmp_path, weights_file, capsys):
        qubo_path = tmp_path / "m.qubo"
        run(
            capsys, "build-qubo", "--weights", weights_file, "--digit", "0",
            "--qubo", str(qubo_path), "--layout", str(tmp_path / "m.layout"),
        )
        code, _, err = run(
            capsys, "sample", "--qubo", str(qubo_path),
            "--samples", str(tmp_path / "m.samples"), "--backend", "exact",
        )
        assert code == 2
        assert "24" in err


class TestClassify:
    def test_folded_exact_output_is_reproducible(self, feature_model, capsys):
        weights_path, features_path = feature_model
        argv = (
            "classify", "--weights", weights_path, "--features", features_path,
            "--clamp-mode", "folded", "--backend", "exact", "--seed", "3",
        )
        code_a, out_a, _ = run(capsys, *argv)
        code_b, out_b, _ = run(capsys, *argv)
        assert code_a == code_b == 0
        assert out_a == out_b
        assert out_a.startswith("input")
        assert len(out_a.splitlines()) == 4

    def test_csv_format(self, feature_model, capsys):
        weights_path, features_path = feature_model
        code, stdout, _ = run(
            capsys, "classify", "--weights", weights_path, "--features", features_path,
            "--clamp-mode", "folded", "--backend", "exact", "--format", "csv",
        )
        assert code == 0
        assert stdout.splitlines()[0] == "input,0,1,2"

    def test_invalid_backend(self, weights_file, capsys):
        code, _, err = run(capsys, "classify", "--weights", weights_file, "--backend", "warp")
        assert code == 1
        assert "warp" in err

    def test_invalid_format(self, weights_file, capsys):
        code, _, err = run(capsys, "classify", "--weights", weights_file, "--format", "xml")
        assert code == 1

    def test_missing_weight_file(self, capsys):
        code, _, err = run(capsys, "classify", "--weights", "/no/model.weights")
        assert code == 2


class TestBench:
    def test_report_contents(self, capsys):
        code, stdout, _ = run(
            capsys, "bench", "--reads", "5", "--sweeps", "50",
            "--repetitions", "30", "--seed", "0",
        )
        assert code == 0
        assert "model nodes 358 layers 196 128 24 10" in stdout
        assert "classical forward min" in stdout
        assert "per read" in stdout
        assert "ratio" in stdout
        assert "no quantum hardware timing" in stdout

    def test_zero_reads_is_usage_error(self, capsys):
        code, _, err = run(capsys, "bench", "--reads", "0", "--repetitions", "30")
        assert code == 1

    def test_too_few_repetitions(self, capsys):
        code, _, err = run(capsys, "bench", "--reads", "5", "--repetitions", "10")
        assert code == 1
