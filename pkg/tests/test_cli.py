import json
from pathlib import Path

import pytest

from slede.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A small synthetic corpus plus split/featurize artifacts."""
    root = tmp_path_factory.mktemp("cli")
    assert run("synth", "--out", root, "--seed", "7",
               "--n-dialogues", "8", "--turns-per-dialogue", "24") == 0
    assert run("split", "--corpus", root / "corpus.json", "--out", root, "--seed", "7") == 0
    assert run("featurize", "--minis", root / "minis.json", "--out", root,
               "--format", "csv") == 0
    return root


class TestExitCodes:
    def test_usage_error_is_one(self, capsys):
        assert run("definitely-not-a-command") == 1
        assert run("train") == 1  # missing required --matrix

    def test_data_error_is_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert run("validate", "--corpus", bad) == 2

    def test_invariant_error_is_two(self, tmp_path, capsys):
        payload = {
            "registry": [{"id": "backchannels", "level": "utterance"}],
            "labels": [],
            "dialogues": [
                {
                    "id": "d1",
                    "topic": "t",
                    "speakers": [{"speaker_id": "s"}],
                    "turns": [{"index": 0, "speaker_id": "s", "tokens": ["a", "b"]}],
                }
            ],
            "span_annotations": [],
            "interactivity_scores": {
                "d1": [{"annotator_id": "a9", "label_id": "topic", "score": 9}]
            },
        }
        path = tmp_path / "bad_score.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        assert run("validate", "--corpus", path) == 2
        err = capsys.readouterr().err
        assert "d1" in err and "a9" in err

    def test_single_class_targets_are_a_data_error(self, tmp_path):
        matrix = {
            "mini_ids": ["m1", "m2"],
            "feature_ids": ["a"],
            "feature_levels": ["token"],
            "rows": [[0.1], [0.2]],
            "targets": {"topic": [3, 3]},
        }
        path = tmp_path / "matrix.json"
        path.write_text(json.dumps(matrix), encoding="utf-8")
        assert run("evaluate", "--matrix", path, "--out", tmp_path, "--model", "nb") == 2

    def test_numerical_error_is_three(self, tmp_path, capsys):
        # both annotators mark every token and give identical scores on the
        # single dialogue: every agreement cell is undefined
        payload = {
            "registry": [{"id": "backchannels", "level": "utterance"}],
            "labels": [],
            "dialogues": [
                {
                    "id": "d1",
                    "topic": "t",
                    "speakers": [{"speaker_id": "s"}],
                    "turns": [{"index": 0, "speaker_id": "s", "tokens": ["a", "b"]}],
                }
            ],
            "span_annotations": [
                {"dialogue_id": "d1", "annotator_id": a, "feature_id": "backchannels",
                 "turn_index": 0, "token_range": [0, 2]}
                for a in ("a1", "a2")
            ],
            "interactivity_scores": {
                "d1": [{"annotator_id": a, "label_id": "topic", "score": 3}
                       for a in ("a1", "a2")]
            },
        }
        path = tmp_path / "undefined.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        assert run("agree", "--corpus", path, "--out", tmp_path) == 3
        assert "no agreement cell" in capsys.readouterr().err


class TestArtifacts:
    def test_synth_byte_identical_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("synth", "--out", out, "--seed", "7",
                       "--n-dialogues", "4", "--turns-per-dialogue", "12") == 0
        assert (a / "corpus.json").read_bytes() == (b / "corpus.json").read_bytes()

    def test_pipeline_artifacts_byte_identical(self, workspace, tmp_path):
        rerun = tmp_path / "rerun"
        assert run("split", "--corpus", workspace / "corpus.json", "--out", rerun,
                   "--seed", "7") == 0
        assert (workspace / "minis.json").read_bytes() == (rerun / "minis.json").read_bytes()
        assert run("featurize", "--minis", rerun / "minis.json", "--out", rerun,
                   "--format", "csv") == 0
        assert (workspace / "matrix.json").read_bytes() == (rerun / "matrix.json").read_bytes()
        assert (workspace / "matrix.csv").read_bytes() == (rerun / "matrix.csv").read_bytes()

    def test_artifacts_embed_seed_and_config_hash(self, workspace):
        payload = json.loads((workspace / "minis.json").read_text())
        assert payload["meta"]["seed"] == 7
        assert len(payload["meta"]["config_hash"]) == 16

    def test_evaluate_and_agree_reproducible(self, workspace, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("evaluate", "--matrix", workspace / "matrix.json", "--out", out,
                       "--model", "nb", "--folds", "3", "--seed", "5",
                       "--format", "table") == 0
            assert run("agree", "--corpus", workspace / "corpus.json", "--out", out,
                       "--format", "table") == 0
        for name in ("metrics.json", "metrics.txt", "agreement.json", "agreement.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_train_importance_ablate_reproducible(self, workspace, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("train", "--matrix", workspace / "matrix.json", "--out", out,
                       "--model", "rf", "--n-trees", "5", "--seed", "3") == 0
            assert run("importance", "--matrix", workspace / "matrix.json", "--out", out,
                       "--model", "nb", "--seed", "3") == 0
            assert run("ablate", "--minis", workspace / "minis.json", "--out", out,
                       "--model", "nb", "--folds", "3", "--seed", "3") == 0
        for name in ("models.json", "importance.json", "ablation.json", "ablation.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_out_dir_env_fallback(self, workspace, tmp_path, monkeypatch):
        monkeypatch.setenv("SLEDE_OUT", str(tmp_path / "env_out"))
        assert run("featurize", "--minis", workspace / "minis.json") == 0
        assert (tmp_path / "env_out" / "matrix.json").exists()

    def test_no_out_anywhere_is_usage_error(self, workspace, monkeypatch):
        monkeypatch.delenv("SLEDE_OUT", raising=False)
        assert run("featurize", "--minis", workspace / "minis.json") == 1


class TestComposition:
    def test_split_feeds_featurize_feeds_train(self, workspace, tmp_path):
        out = tmp_path / "chain"
        assert run("train", "--matrix", workspace / "matrix.json", "--out", out,
                   "--model", "nb") == 0
        models = json.loads((out / "models.json").read_text())["models"]
        assert sorted(models) == ["closing", "opening", "tone", "topic"]
        assert set(models["topic"]) == {"nb"}

    def test_report_bundles_everything(self, tmp_path, capsys):
        root = tmp_path
        assert run("synth", "--out", root, "--seed", "3",
                   "--n-dialogues", "12", "--turns-per-dialogue", "24") == 0
        assert run("report", "--corpus", root / "corpus.json", "--out", root,
                   "--model", "nb", "--folds", "3", "--seed", "3") == 0
        bundle = json.loads((root / "report.json").read_text())
        assert set(bundle) >= {"agreement", "metrics", "importance", "ablation", "n_minis", "meta"}
        text = (root / "report.txt").read_text()
        for heading in ("agreement", "prediction", "Common", "ablation"):
            assert heading in text
        summary = capsys.readouterr().out
        assert "all-label F1 >=" in summary
