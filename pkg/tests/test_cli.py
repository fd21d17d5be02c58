import json

from click.testing import CliRunner

from simbench.cli import main


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


class TestCliVerbs:
    def test_run_all_success(self, mini_workspace, tmp_path):
        result = invoke(
            "run-all", "--config", str(mini_workspace["config_path"]), "--out-dir", str(tmp_path / "run")
        )
        assert result.exit_code == 0, result.output
        body = json.loads(result.output)
        assert all(v == "ok" for v in body["stages"].values())
        assert (tmp_path / "run" / "tables" / "performance_spearman.csv").exists()

    def test_missing_config_exits_1(self, tmp_path):
        result = invoke("run-all", "--config", "/no/such/config.json", "--out-dir", str(tmp_path / "run"))
        assert result.exit_code == 1
        assert "not found" in result.output

    def test_correlate_before_measure_exits_2(self, mini_workspace, tmp_path):
        out = str(tmp_path / "run")
        assert invoke("evaluate", "--config", str(mini_workspace["config_path"]), "--out-dir", out).exit_code == 0
        result = invoke("correlate", "--out-dir", out)
        assert result.exit_code == 2
        assert "missing similarity report" in result.output

    def test_ingest_verb(self, mini_workspace, tmp_path):
        result = invoke(
            "ingest",
            str(mini_workspace["dir"] / "task.jsonl"),
            "--kind", "task_dataset",
            "--store-dir", str(tmp_path / "store"),
            "--name", "mytask",
        )
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["example_count"] == 12

    def test_embed_index_verb(self, mini_workspace, tmp_path):
        result = invoke(
            "embed-index",
            str(mini_workspace["dir"] / "corpus.emb.jsonl"),
            "--out-dir", str(tmp_path / "index"),
            "--shard-size", "32",
        )
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["num_shards"] == 2

    def test_titrate_verb(self, fixtures_dir, tmp_path):
        result = invoke(
            "titrate",
            "--source", str(fixtures_dir / "parallel" / "source.jsonl"),
            "--target", str(fixtures_dir / "parallel" / "target.jsonl"),
            "--out-dir", str(tmp_path / "series"),
            "--language", "synthetic",
            "--fractions", "0,0.5,1",
        )
        assert result.exit_code == 0, result.output
        assert len(json.loads(result.output)["datasets"]) == 3

    def test_measure_then_figures(self, mini_workspace, tmp_path):
        out = str(tmp_path / "run")
        assert invoke("measure", "--config", str(mini_workspace["config_path"]), "--out-dir", out).exit_code == 0
        assert invoke("evaluate", "--out-dir", out).exit_code == 0
        assert invoke("correlate", "--out-dir", out).exit_code == 0
        result = invoke("figures", "--out-dir", out)
        assert result.exit_code == 0, result.output
