import csv
import dataclasses
import json
import subprocess
import sys

import pytest

from zklab import cli
from zklab.config import SECTIONS, GlobalParams, load_config, parse_config
from zklab.errors import ConfigError
from zklab.report import Report, Table, canonical_hash


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    def test_shipped_defaults_match_records(self):
        cfg = load_config()
        for name, cls in SECTIONS.items():
            assert dataclasses.asdict(cfg.section(name)) == dataclasses.asdict(cls())
        assert cfg.globals == GlobalParams()

    def test_shipped_file_lists_every_key(self):
        # keys without a TOML value (null defaults) appear only as comments
        from importlib import resources

        from zklab.config import tomllib
        raw = tomllib.loads(resources.files("zklab").joinpath("default_config.toml").read_text())
        for name, cls in SECTIONS.items():
            fields = {f.name for f in dataclasses.fields(cls)} - {"dt"}
            assert set(raw[name]) == fields, name
        assert set(raw["global"]) == {"threads", "tol_scale"}

    def test_unknown_key_names_section_and_key(self, tmp_path):
        with pytest.raises(ConfigError, match=r"\[weights\] unknown key 'ao'.*allowed keys: a0"):
            load_config(write(tmp_path, "[weights]\nao = 1.0\n"))

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config({"weigths": {}})

    @pytest.mark.parametrize("text,match", [
        ("[weights]\na0 = -1.0\n", r"\[weights\] .*a0 must be positive"),
        ("[weights]\nns = 4\n", r"\[weights\] ns: expected an array"),
        ("[weights]\nsamples = 1.5\n", r"\[weights\] samples: expected an integer"),
        ("[decay15]\nnonlinear = 1\n", r"\[decay15\] nonlinear: expected true or false"),
        ("[global]\nthreads = 0\n", r"\[global\] threads must be >= 1"),
        ("[annulus]\nshift = [1.0]\n", r"\[annulus\] shift: expected an array of 2 entries"),
    ])
    def test_constraint_messages(self, tmp_path, text, match):
        with pytest.raises(ConfigError, match=match):
            load_config(write(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.toml")

    def test_malformed_toml(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path, "[weights\n"))

    def test_integers_accepted_for_floats(self, tmp_path):
        cfg = load_config(write(tmp_path, "[weights]\na0 = 2\n"))
        assert cfg.section("weights").a0 == 2.0 and isinstance(cfg.section("weights").a0, float)

    def test_canonical_scope(self, tmp_path):
        a = load_config(write(tmp_path, "[global]\nthreads = 3\n", "a.toml"))
        b = load_config(write(tmp_path, "[global]\ntol_scale = 2.0\n", "b.toml"))
        base = load_config()
        assert canonical_hash(a.canonical("weights")) == canonical_hash(base.canonical("weights"))
        assert canonical_hash(b.canonical("weights")) != canonical_hash(base.canonical("weights"))


class TestTable:
    def test_empty_table_has_header_only(self):
        t = Table("x", [("t", "s"), ("W", "1")])
        assert t.to_csv() == "t [s],W [1]\n"

    def test_floats_roundtrip(self):
        t = Table("x", [("a", "1")])
        t.add(0.1 + 0.2)
        rows = list(csv.reader(t.to_csv().splitlines()))
        assert float(rows[1][0]) == 0.1 + 0.2


class TestCli:
    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["bogus"])
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_bad_config_exit(self, tmp_path, capsys):
        rc = cli.main(["weights", "--config", str(write(tmp_path, "[weights]\nao = 1\n")),
                       "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "unknown key 'ao'" in capsys.readouterr().err

    def test_weights_outputs(self, tmp_path):
        out = tmp_path / "o"
        assert cli.main(["weights", "--out", str(out)]) == 0
        env_path = next(out.glob("weights-*.json"))
        env = json.loads(env_path.read_text())
        assert env["status"] == "pass" and env["subcommand"] == "weights"
        assert env_path.name == f"weights-{env['config_hash'][:8]}.json"
        for name in env["csv"]:
            assert (out / name).is_file()
        assert set(env["versions"]) == {"zklab", "python", "numpy", "scipy"}

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli.main(["weights", "--out", str(a)])
        cli.main(["weights", "--out", str(b)])
        names = sorted(p.name for p in a.glob("*.csv"))
        assert names == sorted(p.name for p in b.glob("*.csv"))
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes()

    def test_out_precedence(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ZKLAB_OUT", str(tmp_path / "env"))
        cfg = write(tmp_path, f'[global]\nout = "{tmp_path / "cfg"}"\n')
        cli.main(["weights"])
        assert any((tmp_path / "env").glob("weights-*.json"))
        cli.main(["weights", "--config", str(cfg)])
        assert any((tmp_path / "cfg").glob("weights-*.json"))
        cli.main(["weights", "--config", str(cfg), "--out", str(tmp_path / "flag")])
        assert any((tmp_path / "flag").glob("weights-*.json"))

    def test_tol_scale_changes_hash(self, tmp_path):
        cli.main(["weights", "--out", str(tmp_path), "--tol-scale", "2"])
        cli.main(["weights", "--out", str(tmp_path)])
        assert len(list(tmp_path.glob("weights-*.json"))) == 2

    @pytest.mark.parametrize("flag", [["--threads", "0"], ["--tol-scale", "-1"], ["--seed", "-3"]])
    def test_bad_flags(self, tmp_path, flag):
        assert cli.main(["weights", "--out", str(tmp_path), *flag]) == 1

    def test_exit_codes(self):
        assert cli._exit_code(["pass", "inconclusive"]) == 2
        assert cli._exit_code(["inconclusive", "fail"]) == 1
        assert cli._exit_code(["pass"]) == 0

    def test_inconclusive_report_status(self):
        r = Report("x")
        r.check("a", True, 1.0, 2.0)
        r.mark_inconclusive("edge")
        assert r.status == "inconclusive"

    def test_module_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "zklab", "weights", "--out", str(tmp_path)],
                             capture_output=True, text=True)
        assert res.returncode == 0 and "pass" in res.stdout
