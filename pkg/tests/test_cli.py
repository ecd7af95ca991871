import json
from pathlib import Path

import pytest

from mvnav.cli import main

SCENE = ["--width", "64", "--height", "64", "--views", "2", "--frames", "8",
         "--scene-seed", "0"]
STORE_FLAGS = ["--block-size", "8", "--gop", "4", "--ladder", "4,8,16,32,64",
               "--ref-q", "4", "--intermediates", "1"]


@pytest.fixture(scope="module")
def cli_store(tmp_path_factory):
    out = tmp_path_factory.mktemp("clistore") / "store"
    assert main(["prepare", *SCENE, *STORE_FLAGS, "--out", str(out)]) == 0
    return out


def _dir_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(Path(root).rglob("*")) if p.is_file()}


class TestParser:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["--help"])
        assert e.value.code == 0
        assert "prepare" in capsys.readouterr().out

    def test_prepare_requires_out(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["prepare"])
        assert e.value.code != 0
        assert "--out" in capsys.readouterr().err


class TestPrepare:
    def test_rerun_byte_identical(self, cli_store, tmp_path):
        again = tmp_path / "again"
        assert main(["prepare", *SCENE, *STORE_FLAGS,
                     "--out", str(again)]) == 0
        assert _dir_bytes(cli_store) == _dir_bytes(again)


class TestSweep:
    def test_single_config_single_path(self, cli_store, capsys, tmp_path):
        args = ["sweep", "--store", str(cli_store), "--nt", "4", "--nd", "0",
                "--budgets", "60000", "--paths", "1", "--length", "7",
                "--seed", "3", "--out", str(tmp_path / "o")]
        assert main(args) == 0
        out = capsys.readouterr().out
        lines = [l for l in out.strip().splitlines() if l]
        assert len(lines) == 2    # header + one row
        assert (tmp_path / "o" / "sweep.tsv").exists()
        assert (tmp_path / "o" / "sweep.config.json").exists()

    def test_rerun_byte_identical(self, cli_store, tmp_path, capsys):
        outs = []
        for name in ("a", "b"):
            args = ["sweep", "--store", str(cli_store), "--nt", "4",
                    "--nd", "0", "--budgets", "60000", "--paths", "1",
                    "--length", "7", "--seed", "3",
                    "--out", str(tmp_path / name)]
            assert main(args) == 0
            outs.append((tmp_path / name / "sweep.tsv").read_bytes())
        capsys.readouterr()
        assert outs[0] == outs[1]


class TestComplexity:
    def test_ratios(self, capsys):
        assert main(["complexity", *SCENE, "--frames", "2",
                     "--intermediates", "1"]) == 0
        rows = [l.split("\t") for l in
                capsys.readouterr().out.strip().splitlines()[1:]]
        table = {int(r[0]): float(r[1]) for r in rows}
        assert table[1] == pytest.approx(1.0)
        assert table[16] == pytest.approx(1 / 256)
        variances = {int(r[0]): float(r[2]) for r in rows}
        assert variances[4] <= variances[8] <= variances[16]


class TestGop:
    def test_single_candidate(self, capsys):
        assert main(["gop", *SCENE, "--intermediates", "1",
                     "--candidates", "4", "--paths", "2", "--nt", "4",
                     "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "aware" in out


class TestBaselines:
    def test_runs_and_reports(self, cli_store, capsys):
        assert main(["baselines", "--store", str(cli_store),
                     "--budgets", "60000", "--paths", "1", "--length", "7",
                     "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "proposed" in out and "block_inpaint" in out


class TestAllocCompare:
    def test_single_scenario(self, cli_store, capsys):
        assert main(["alloc-compare", "--store", str(cli_store),
                     "--scenarios", "0.6,0.3,0.3",
                     "--budgets", "30000,60000,120000,240000",
                     "--paths", "1", "--length", "7", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "bd_rate_percent" in out


class TestServe:
    def test_bad_store_path(self, capsys):
        assert main(["serve", "--store", "/nonexistent/store"]) == 1
        assert "error" in capsys.readouterr().err
