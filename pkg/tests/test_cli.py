import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from dupq.cli import main

from conftest import FIXTURES

PAIRS20 = str(FIXTURES / "pairs_20.csv")
PAIRS100 = str(FIXTURES / "pairs_100.csv")
PAIRS200 = str(FIXTURES / "pairs_200_overfit.csv")


def file_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class TestUsage:
    def test_no_args_prints_usage(self, capsys):
        assert main([]) == 0
        assert "usage: dupq" in capsys.readouterr().out

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "unknown command" in capsys.readouterr().err

    def test_unknown_config_key(self, capsys):
        assert main(["stats", "--data", PAIRS20, "--bogus", "1"]) == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_command_help(self, capsys):
        assert main(["train", "--help"]) == 0
        assert "--model" in capsys.readouterr().out

    def test_missing_value(self, capsys):
        assert main(["stats", "--data"]) == 1

    def test_missing_data_file_is_data_error(self, tmp_path):
        assert main(["stats", "--data", str(tmp_path / "none.csv")]) == 2

    def test_config_file_with_override(self, tmp_path, capsys):
        hist = tmp_path / "h.csv"
        conf = tmp_path / "run.conf"
        conf.write_text(f"# comment line\ndata = {PAIRS20}\nout = ignored.csv\n")
        assert main(["stats", "--config", str(conf), "--out", str(hist)]) == 0
        assert hist.exists()
        err = capsys.readouterr().err
        assert "stats configuration" in err

    def test_bad_config_line(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("data\n")
        assert main(["stats", "--config", str(conf)]) == 1


class TestStats:
    def test_fixture_summary_and_histogram(self, tmp_path, capsys):
        out = tmp_path / "hist.csv"
        assert main(["stats", "--data", PAIRS20, "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "pairs:                      20" in printed
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["occurrences", "n_questions"]
        assert rows[1:] == [["1", "38"], ["2", "1"]]

    def test_empty_file_zeroed_summary(self, tmp_path, capsys):
        data = tmp_path / "empty.csv"
        data.write_text("id,qid1,qid2,question1,question2,is_duplicate\n")
        out = tmp_path / "hist.csv"
        assert main(["stats", "--data", str(data), "--out", str(out)]) == 0
        assert "pairs:                      0" in capsys.readouterr().out


class TestSplit:
    def test_blind_reproducible(self, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        args = ["split", "--data", PAIRS100, "--kind", "blind", "--seed", "5"]
        assert main(args + ["--outdir", str(out1)]) == 0
        assert main(args + ["--outdir", str(out2)]) == 0
        for name in ("train.csv", "validation.csv", "test.csv", "manifest.txt"):
            assert file_hash(out1 / name) == file_hash(out2 / name)

    def test_disjoint_manifest_records_check(self, tmp_path):
        out = tmp_path / "split"
        assert main(["split", "--data", PAIRS100, "--kind", "disjoint",
                     "--seed", "7", "--outdir", str(out)]) == 0
        manifest = (out / "manifest.txt").read_text()
        assert "disjoint_check = pass" in manifest
        assert "kind = disjoint" in manifest

    def test_bad_kind(self, capsys):
        assert main(["split", "--data", PAIRS100, "--kind", "sideways",
                     "--outdir", "/tmp/x"]) == 1

    def test_bad_ratios(self):
        assert main(["split", "--data", PAIRS100, "--ratios", "0.5,0.2,0.1",
                     "--outdir", "/tmp/x"]) == 1


@pytest.fixture(scope="module")
def split100(tmp_path_factory):
    out = tmp_path_factory.mktemp("splits") / "blind"
    assert main(["split", "--data", PAIRS100, "--kind", "blind", "--seed", "1",
                 "--outdir", str(out)]) == 0
    return out


class TestTrainEval:
    def test_lr_train_eval_consistency(self, tmp_path, split100, capsys):
        model = tmp_path / "lr"
        rc = main([
            "train", "--model", "lr", "--train", str(split100 / "train.csv"),
            "--valid", str(split100 / "validation.csv"), "--out", str(model),
            "--ngram_order", "1", "--n_iter", "10", "--alpha", "0.001",
        ])
        assert rc == 0
        assert (tmp_path / "lr.model").exists()
        assert (tmp_path / "lr.space").exists()

        log_lines = (tmp_path / "lr.metrics.jsonl").read_text().splitlines()
        final = json.loads(log_lines[-1])

        report = tmp_path / "report.csv"
        capsys.readouterr()
        rc = main(["eval", "--model", str(tmp_path / "lr.model"),
                   "--data", str(split100 / "train.csv"), "--out", str(report)])
        assert rc == 0
        rows = list(csv.DictReader(report.open()))
        eval_acc = float(rows[0]["accuracy"])
        assert abs(eval_acc - final["final_train_accuracy"]) < 0.1

    def test_train_twice_byte_identical_model(self, tmp_path, split100):
        args = ["train", "--model", "lr", "--train", str(split100 / "train.csv"),
                "--valid", str(split100 / "validation.csv"), "--ngram_order", "1",
                "--n_iter", "5", "--seed", "3"]
        m1, m2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(m1)]) == 0
        assert main(args + ["--out", str(m2)]) == 0
        assert file_hash(tmp_path / "a.model") == file_hash(tmp_path / "b.model")
        assert file_hash(tmp_path / "a.space") == file_hash(tmp_path / "b.space")

    def test_svm_hinge_ngram(self, tmp_path, split100):
        rc = main(["train", "--model", "svm_linear", "--train",
                   str(split100 / "train.csv"), "--valid",
                   str(split100 / "validation.csv"), "--out",
                   str(tmp_path / "svm"), "--ngram_order", "1", "--n_iter", "5"])
        assert rc == 0

    def test_tree_models_on_hand_features(self, tmp_path, split100):
        rc = main(["train", "--model", "dtree", "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"),
                   "--out", str(tmp_path / "dt")])
        assert rc == 0
        rc = main(["eval", "--model", str(tmp_path / "dt.model"),
                   "--data", str(split100 / "test.csv")])
        assert rc == 0

    def test_gbt_on_ngrams_rejected(self, capsys, split100):
        rc = main(["train", "--model", "gbt", "--feature", "ngram",
                   "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "intractable" in err and "feature=hand" in err

    def test_svm_rbf_on_ngrams_rejected(self, capsys, split100):
        rc = main(["train", "--model", "svm_rbf", "--feature", "ngram",
                   "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv")])
        assert rc == 1
        assert "dense" in capsys.readouterr().err

    def test_unknown_model(self, split100):
        assert main(["train", "--model", "perceptron",
                     "--train", str(split100 / "train.csv"),
                     "--valid", str(split100 / "validation.csv")]) == 1

    def test_svm_embed_roundtrip(self, tmp_path, split100):
        vecs = tmp_path / "vecs.txt"
        rng = np.random.default_rng(0)
        words = set()
        for path in (split100 / "train.csv", split100 / "validation.csv"):
            for row in csv.DictReader(path.open()):
                words.update(row["question1"].split())
                words.update(row["question2"].split())
        with vecs.open("w") as fh:
            for w in sorted(words):
                values = " ".join(f"{x:.4f}" for x in rng.normal(size=5))
                fh.write(f"{w} {values}\n")
        rc = main(["train", "--model", "svm_rbf", "--feature", "embed",
                   "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"),
                   "--out", str(tmp_path / "se"), "--embeddings", str(vecs),
                   "--embedding_dim", "5"])
        assert rc == 0
        rc = main(["eval", "--model", str(tmp_path / "se.model"),
                   "--data", str(split100 / "test.csv"), "--embeddings", str(vecs)])
        assert rc == 0

    def test_neural_smoke_end_to_end(self, tmp_path, split100):
        rc = main(["train", "--model", "cbow", "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"),
                   "--out", str(tmp_path / "nn"), "--hidden_dim", "8",
                   "--embedding_dim", "4", "--epochs", "2", "--batch_size", "16"])
        assert rc == 0
        rc = main(["eval", "--model", str(tmp_path / "nn.model"),
                   "--data", str(split100 / "test.csv")])
        assert rc == 0

    def test_space_hash_mismatch_aborts(self, tmp_path, split100, capsys):
        base = ["--train", str(split100 / "train.csv"),
                "--valid", str(split100 / "validation.csv"),
                "--n_iter", "3"]
        assert main(["train", "--model", "lr", "--out", str(tmp_path / "m1"),
                     "--ngram_order", "1"] + base) == 0
        assert main(["train", "--model", "lr", "--out", str(tmp_path / "m2"),
                     "--ngram_order", "2"] + base) == 0
        rc = main(["eval", "--model", str(tmp_path / "m1.model"),
                   "--space", str(tmp_path / "m2.space"),
                   "--data", str(split100 / "test.csv")])
        assert rc == 2
        assert "hash mismatch" in capsys.readouterr().err


class TestSweep:
    def test_alpha_sweep_csv(self, tmp_path, split100):
        out = tmp_path / "alpha.csv"
        rc = main(["sweep", "--kind", "alpha", "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"), "--out", str(out),
                   "--alphas", "0.01,0.001", "--n_iter", "4", "--ngram_order", "1"])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        assert [r["alpha"] for r in rows] == ["0.01", "0.001"]
        assert all(r["error"] == "" for r in rows)

    def test_iters_sweep_csv(self, tmp_path, split100):
        out = tmp_path / "iters.csv"
        rc = main(["sweep", "--kind", "iters", "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"), "--out", str(out),
                   "--iters", "2,4", "--ngram_order", "1"])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        assert [r["n_iter"] for r in rows] == ["2", "4"]

    def test_svm_c_sweep_maps_alpha(self, tmp_path, split100):
        out = tmp_path / "c.csv"
        rc = main(["sweep", "--kind", "svm_c", "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"), "--out", str(out),
                   "--c_values", "0.1,1.0", "--n_iter", "4", "--ngram_order", "1"])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        n_train = 70  # blind split of the 100-pair fixture
        assert float(rows[0]["alpha"]) == pytest.approx(1.0 / (n_train * 0.1), rel=1e-3)

    def test_preproc_sweep_protocol(self, tmp_path, split100):
        out = tmp_path / "pre.csv"
        rc = main(["sweep", "--kind", "preproc", "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"), "--out", str(out),
                   "--pipelines", "none,remove_punc", "--repeats", "2",
                   "--n_iter", "3"])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        assert [r["pipeline"] for r in rows] == ["none", "remove_punc"]
        assert {"mean_accuracy", "run1", "run2"} <= set(rows[0])

    def test_ablation_sweep_table8_shape(self, tmp_path, split100):
        out = tmp_path / "abl.csv"
        rc = main(["sweep", "--kind", "ablation", "--train", str(split100 / "train.csv"),
                   "--valid", str(split100 / "validation.csv"), "--out", str(out),
                   "--groups", "L,LC"])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        assert [r["groups"] for r in rows] == ["majority", "L", "L,LC"]
        assert [r["n_features"] for r in rows] == ["0", "4", "6"]

    def test_unknown_sweep_kind(self, split100):
        assert main(["sweep", "--kind", "magic", "--train", str(split100 / "train.csv"),
                     "--valid", str(split100 / "validation.csv")]) == 1


class TestErrors:
    def test_listing_sorted_by_confidence(self, tmp_path, split100, capsys):
        model = tmp_path / "lr"
        assert main(["train", "--model", "lr", "--train", str(split100 / "train.csv"),
                     "--valid", str(split100 / "validation.csv"),
                     "--out", str(model), "--ngram_order", "1", "--n_iter", "5"]) == 0
        out = tmp_path / "errs.csv"
        capsys.readouterr()
        rc = main(["errors", "--model", str(tmp_path / "lr.model"),
                   "--data", str(split100 / "validation.csv"), "--n", "5",
                   "--out", str(out)])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) <= 5
        scores = [abs(float(r["score"])) for r in rows]
        assert scores == sorted(scores, reverse=True)
        for r in rows:
            assert r["predicted"] != r["gold"]

    def test_n_zero_empty(self, tmp_path, split100, capsys):
        model = tmp_path / "lr"
        assert main(["train", "--model", "lr", "--train", str(split100 / "train.csv"),
                     "--valid", str(split100 / "validation.csv"),
                     "--out", str(model), "--ngram_order", "1", "--n_iter", "3"]) == 0
        capsys.readouterr()
        rc = main(["errors", "--model", str(tmp_path / "lr.model"),
                   "--data", str(split100 / "validation.csv"), "--n", "0"])
        assert rc == 0
        assert "no misclassified" in capsys.readouterr().out
