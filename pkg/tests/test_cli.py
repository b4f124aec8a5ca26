"""Argument handling and exit codes of the experiment CLI."""

import pytest

from sketchrec.cli import _DEFAULTS, build_parser, main


class TestParser:
    def test_all_subcommands_registered(self):
        parser = build_parser()
        for name in list(_DEFAULTS) + ["facts"]:
            args = parser.parse_args([name] if name == "facts" else [name, "--trials", "0"])
            assert args.command == name

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_schedule_only_on_pipeline(self):
        parser = build_parser()
        parser.parse_args(["sr-pipeline", "--schedule", "fast"])
        with pytest.raises(SystemExit):
            parser.parse_args(["hh-cm", "--schedule", "fast"])


class TestMain:
    def test_quick_run_exits_zero(self, capsys):
        rc = main(
            ["hh-cm", "--n", "64", "--eps", "0.25", "--delta", "0.1",
             "--trials", "2", "--dist", "adversarial", "--seed", "3"]
        )
        assert rc == 0
        assert "rate=" in capsys.readouterr().out

    def test_unmet_target_exits_one(self, capsys):
        rc = main(
            ["hh-cm", "--n", "64", "--eps", "0.25", "--delta", "0.1",
             "--trials", "2", "--dist", "adversarial", "--target", "1.1"]
        )
        assert rc == 1

    def test_config_file_then_flag_precedence(self, tmp_path, capsys):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("n=64\neps=0.25\ndelta=0.1\ntrials=5\ndist=adversarial\n")
        rc = main(["hh-cm", "--config", str(cfg_file), "--trials", "1"])
        assert rc == 0
        assert "trials=1" in capsys.readouterr().out

    def test_out_writes_tables(self, tmp_path):
        out = tmp_path / "res"
        rc = main(
            ["hh-cm", "--n", "64", "--eps", "0.25", "--delta", "0.1",
             "--trials", "2", "--dist", "adversarial", "--out", str(out)]
        )
        assert rc == 0
        assert (tmp_path / "res.csv").exists()
        assert (tmp_path / "res.dat").exists()

    def test_facts_reports_known_failure(self, capsys):
        rc = main(["facts", "--samples", "5000", "--tv-samples", "20000"])
        out = capsys.readouterr().out
        assert rc == 1  # the claimed l1 interval misses the true mean
        assert "l1-claimed" in out and "FAIL" in out
        assert "l1-recentred" in out
