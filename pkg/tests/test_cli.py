# -*- coding: utf-8 -*-
"""End-to-end checks of the command-line surface via main(argv)."""

import os

import pytest

from rodiac.cli import (EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE,
                        load_prepared, main, parse_run_config)
from rodiac.textnorm import strip_diacritics

SENTENCES = [
    "Fata stă la masă.",
    "Ana are o față frumoasă.",
    "Țara este în vară.",
    "Știința vine încet.",
    "Mama face o cană de ceai.",
    "Tata stă în casă.",
    "Copilul învață la școală.",
    "Pisica sare pe masă.",
]


def write_corpus(tmp_path):
    path = tmp_path / "raw.txt"
    path.write_text(" ".join(SENTENCES), encoding="utf-8")
    return str(path)


def write_prepared(tmp_path, sentences=SENTENCES, n_dev=2):
    """Hand-written data dir with a deterministic train/dev assignment."""
    data_dir = tmp_path / "data"
    data_dir.mkdir(exist_ok=True)
    (data_dir / "corpus.txt").write_text("\n".join(sentences) + "\n",
                                         encoding="utf-8")
    rows = []
    for i in range(1, len(sentences) + 1):
        rows.append(f"{i}\t{'dev' if i > len(sentences) - n_dev else 'train'}")
    (data_dir / "split.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    return str(data_dir)


def write_vectors(tmp_path):
    path = tmp_path / "vec.txt"
    words = {"fata": 1.0, "masa": 2.0, "tara": 3.0, "ana": 4.0}
    lines = [f"{len(words)} 3"]
    for w, v in words.items():
        lines.append(f"{w} {v} {v} {v}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


TINY_MODEL = ["--set", "char_emb_dim=4", "--set", "char_lstm_h=4",
              "--set", "hidden_sizes=8", "--set", "epochs=2"]


class TestPrepare:
    def test_splits_sentences_and_writes_manifest(self, tmp_path, capsys):
        corpus = write_corpus(tmp_path)
        out = str(tmp_path / "data")
        rc = main(["prepare", "--corpus", corpus, "--out", out,
                   "--split", "0.8,0.1,0.1", "--seed", "7"])
        assert rc == EXIT_OK
        lines = open(os.path.join(out, "corpus.txt"), encoding="utf-8").read().splitlines()
        assert len(lines) == len(SENTENCES)
        manifest = open(os.path.join(out, "split.tsv"), encoding="utf-8").read().splitlines()
        assert len(manifest) == len(SENTENCES)
        assert all(row.split("\t")[1] in ("train", "dev", "test") for row in manifest)
        printed = capsys.readouterr().out
        assert f"sentences: {len(SENTENCES)}" in printed
        assert "ă=" in printed

    def test_deterministic_manifest(self, tmp_path):
        corpus = write_corpus(tmp_path)
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (a, b):
            assert main(["prepare", "--corpus", corpus, "--out", out,
                         "--seed", "3"]) == EXIT_OK
        read = lambda d: open(os.path.join(d, "split.tsv")).read()
        assert read(a) == read(b)

    def test_ratio_filter_can_empty_corpus(self, tmp_path, capsys):
        path = tmp_path / "plain.txt"
        path.write_text("fata sta la masa.", encoding="utf-8")
        rc = main(["prepare", "--corpus", str(path), "--out",
                   str(tmp_path / "o"), "--min-diacritic-ratio", "0.5"])
        assert rc == EXIT_DATA

    def test_bad_split_arg(self, tmp_path):
        corpus = write_corpus(tmp_path)
        rc = main(["prepare", "--corpus", corpus, "--out", str(tmp_path / "o"),
                   "--split", "0.5,0.5"])
        assert rc == EXIT_DATA

    def test_missing_corpus_file(self, tmp_path):
        rc = main(["prepare", "--corpus", str(tmp_path / "nope.txt"),
                   "--out", str(tmp_path / "o")])
        assert rc == EXIT_DATA


class TestEmbed:
    def test_builds_cache(self, tmp_path, capsys):
        vec = write_vectors(tmp_path)
        out = str(tmp_path / "emb.bin")
        assert main(["embed", "--vectors", vec, "--out", out]) == EXIT_OK
        assert os.path.exists(out)
        assert "dim 3" in capsys.readouterr().out

    def test_cache_bytes_deterministic(self, tmp_path):
        vec = write_vectors(tmp_path)
        a, b = str(tmp_path / "a.bin"), str(tmp_path / "b.bin")
        main(["embed", "--vectors", vec, "--out", a])
        main(["embed", "--vectors", vec, "--out", b])
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_malformed_vectors(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3\nword 1.0 2.0\n", encoding="utf-8")
        rc = main(["embed", "--vectors", str(path), "--out",
                   str(tmp_path / "o.bin")])
        assert rc == EXIT_DATA


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("cli_train")
    data_dir = write_prepared(tmp_path)
    ckpt = str(tmp_path / "model.ckpt")
    rc = main(["train", "--set", f"data_dir={data_dir}",
               "--set", f"checkpoint_out={ckpt}",
               "--set", "use_word_path=false",
               "--set", "use_sentence_path=false"] + TINY_MODEL)
    assert rc == EXIT_OK
    return data_dir, ckpt


class TestTrainEvaluateRestore:
    def test_train_writes_checkpoint(self, trained):
        _, ckpt = trained
        assert os.path.exists(ckpt)

    def test_train_without_data_dir(self):
        assert main(["train"] + TINY_MODEL) == EXIT_DATA

    def test_word_path_without_cache_is_an_error(self, tmp_path):
        data_dir = write_prepared(tmp_path)
        rc = main(["train", "--set", f"data_dir={data_dir}"] + TINY_MODEL)
        assert rc == EXIT_DATA

    def test_unknown_config_key(self, tmp_path):
        data_dir = write_prepared(tmp_path)
        rc = main(["train", "--set", f"data_dir={data_dir}",
                   "--set", "learning_rate=0.1"])
        assert rc == EXIT_DATA

    def test_evaluate_prints_report(self, trained, capsys):
        data_dir, ckpt = trained
        rc = main(["evaluate", "--checkpoint", ckpt, "--data", data_dir,
                   "--split", "dev"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "char accuracy:" in out
        assert "unigram baseline:" in out
        # per-letter table: one row per target letter
        for ch in "aăâiîsștț":
            assert any(line.startswith(ch) for line in out.splitlines())

    def test_evaluate_tsv(self, trained, capsys):
        data_dir, ckpt = trained
        rc = main(["evaluate", "--checkpoint", ckpt, "--data", data_dir,
                   "--split", "dev", "--tsv"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "letter\tprecision\trecall\tf1"

    def test_evaluate_missing_checkpoint(self, trained):
        data_dir, _ = trained
        rc = main(["evaluate", "--checkpoint", "/nonexistent.ckpt",
                   "--data", data_dir, "--split", "dev"])
        assert rc == EXIT_DATA

    def test_restore_file_roundtrip(self, trained, tmp_path, capsys):
        _, ckpt = trained
        inp = tmp_path / "in.txt"
        inp.write_text("fata sta la masa.\nana are mere.\n", encoding="utf-8")
        rc = main(["restore", "--checkpoint", ckpt, "--input", str(inp)])
        assert rc == EXIT_OK
        out_lines = capsys.readouterr().out.splitlines()
        assert len(out_lines) == 2
        assert strip_diacritics(out_lines[0]) == "fata sta la masa."
        assert strip_diacritics(out_lines[1]) == "ana are mere."

    def test_restore_stdin(self, trained, capsys, monkeypatch):
        import io
        _, ckpt = trained
        monkeypatch.setattr("sys.stdin", io.StringIO("tara vine.\n"))
        rc = main(["restore", "--checkpoint", ckpt])
        assert rc == EXIT_OK
        assert strip_diacritics(capsys.readouterr().out.rstrip("\n")) == "tara vine."


class TestGradcheck:
    def test_passes_default_threshold(self, capsys):
        assert main(["gradcheck", "--seed", "0"]) == EXIT_OK
        assert "max relative error" in capsys.readouterr().out

    def test_impossible_threshold_fails_numerically(self):
        assert main(["gradcheck", "--threshold", "1e-15"]) == EXIT_NUMERICAL


class TestRunConfig:
    def test_defaults(self):
        values = parse_run_config(None, [])
        assert values["window"] == 13
        assert values["batch_size"] == 256
        assert values["hidden_sizes"] == (256,)

    def test_file_with_comments_and_overrides(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nepochs = 9\nlr=0.01\n", encoding="utf-8")
        values = parse_run_config(str(cfg), ["epochs=4"])
        assert values["epochs"] == 4  # --set wins over the file
        assert values["lr"] == 0.01

    def test_bad_line(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs\n", encoding="utf-8")
        with pytest.raises(ValueError, match="key=value"):
            parse_run_config(str(cfg), [])

    def test_bad_value(self):
        with pytest.raises(ValueError, match="bad value"):
            parse_run_config(None, ["epochs=three"])


class TestUsage:
    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_help_is_success(self):
        assert main(["--help"]) == EXIT_OK


class TestLoadPrepared:
    def test_missing_assignment(self, tmp_path):
        d = tmp_path / "data"
        d.mkdir()
        (d / "corpus.txt").write_text("una\ndoua\n", encoding="utf-8")
        (d / "split.tsv").write_text("1\ttrain\n", encoding="utf-8")
        with pytest.raises(ValueError, match="no split assignment"):
            load_prepared(str(d))

    def test_unknown_split_name(self, tmp_path):
        d = tmp_path / "data"
        d.mkdir()
        (d / "corpus.txt").write_text("una\n", encoding="utf-8")
        (d / "split.tsv").write_text("1\tvalid\n", encoding="utf-8")
        with pytest.raises(ValueError, match="unknown split"):
            load_prepared(str(d))
