"""Driver behavior: flag handling, artifacts, exit codes, reproducibility.

Most cases call cli.main in-process to keep the suite fast; one test
goes through ``python3 -m owl`` to cover the module entry point.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from owl import artifacts as art
from owl import cli
from owl.errors import PreconditionError


def run_cli(*args, capsys=None):
    return cli.main([str(a) for a in args])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class TestResolution:
    def test_seed_is_mandatory(self, tmp_path, capsys):
        rc = run_cli("--experiment", "nibm", "--d", 2, "--n", 10,
                     "--times", "1", "--out", tmp_path)
        assert rc == 2
        assert "--seed is required" in capsys.readouterr().err

    def test_mode_is_mandatory(self, capsys):
        assert run_cli() == 2
        assert "--experiment or --suite" in capsys.readouterr().err

    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("experiment = estimate-h   # trailing comment\n"
                       "\n"
                       "d = 1\n"
                       "n = 50\n"
                       "seed = 5\n")
        out = tmp_path / "o"
        assert run_cli("--config", cfg, "--out", out) == 0
        j = read_json(out / "estimate-h.json")
        assert j["params"]["d"] == 1 and j["params"]["seed"] == 5

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("experiment = estimate-h\nd = 1\nn = 50\nseed = 5\n")
        out = tmp_path / "o"
        assert run_cli("--config", cfg, "--n", 80, "--out", out) == 0
        assert read_json(out / "estimate-h.json")["n"] == 80

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("experiment = estimate-h\nwalkers = 3\nseed = 1\n")
        assert run_cli("--config", cfg) == 2
        assert "walkers" in capsys.readouterr().err

    def test_malformed_config_line_names_position(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("experiment = estimate-h\njust words\n")
        assert run_cli("--config", cfg) == 2
        assert ":2:" in capsys.readouterr().err

    def test_missing_required_flag_names_it(self, tmp_path, capsys):
        rc = run_cli("--experiment", "estimate-v", "--d", 2, "--n", 10,
                     "--seed", 3, "--out", tmp_path)
        assert rc == 2
        assert "--T is required" in capsys.readouterr().err


class TestTrivialIdentities:
    def test_estimate_h_single_walker_is_unity(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("--experiment", "estimate-h", "--d", 1, "--n", 200,
                       "--seed", 7, "--out", out) == 0
        j = read_json(out / "estimate-h.json")
        assert j["mean"] == 1.0 and j["se"] == 0.0


class TestExitCodes:
    def test_tied_start_without_perturbation(self, tmp_path, capsys):
        rc = run_cli("--experiment", "ordered-smc", "--d", 2,
                     "--start", "1,1", "--horizon", 2, "--n", 40,
                     "--resample-every", 1, "--seed", 3, "--no-perturb",
                     "--out", tmp_path)
        assert rc == 2
        assert "tie" in capsys.readouterr().err

    def test_extinction_maps_to_feasibility(self, tmp_path, capsys):
        # A handful of particles forced through a wide chamber for a
        # long stretch dies at the first checkpoint.
        rc = run_cli("--experiment", "ordered-smc", "--d", 4,
                     "--start", "0,1,2,3", "--horizon", 200, "--n", 8,
                     "--resample-every", 100, "--seed", 1,
                     "--out", tmp_path)
        assert rc == 3
        assert "feasibility" in capsys.readouterr().err

    def test_rejection_budget_maps_to_feasibility(self, tmp_path, capsys):
        rc = run_cli("--experiment", "ordered-rejection", "--d", 4,
                     "--start", "0,1,2,3", "--horizon", 50, "--n", 50,
                     "--max-attempts", 120, "--seed", 2, "--out", tmp_path)
        assert rc == 3


class TestDeterminism:
    CONFIG = ("--experiment", "ordered-smc", "--d", 2, "--start", "0,4",
              "--horizon", 3, "--n", 300, "--resample-every", 1.5,
              "--seed", 9)

    def test_thread_count_never_reaches_artifacts(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(*self.CONFIG, "--threads", 1, "--out", a) == 0
        assert run_cli(*self.CONFIG, "--threads", 2, "--out", b) == 0
        names_a = sorted(os.listdir(a))
        assert names_a == sorted(os.listdir(b))
        for name in names_a:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_rerun_appends_to_run_log(self, tmp_path):
        assert run_cli(*self.CONFIG, "--out", tmp_path) == 0
        assert run_cli(*self.CONFIG, "--out", tmp_path) == 0
        lines = (tmp_path / "run-log.jsonl").read_text().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0]) == json.loads(lines[1])


class TestSharding:
    def test_shards_pool_to_the_single_run(self, tmp_path):
        base = ("--experiment", "nibm", "--d", 2, "--start", "0,1",
                "--times", "0.5,1", "--seed", 77)
        whole, s0, s1 = tmp_path / "w", tmp_path / "s0", tmp_path / "s1"
        assert run_cli(*base, "--n", 120, "--out", whole) == 0
        assert run_cli(*base, "--n", 60, "--out", s0) == 0
        assert run_cli(*base, "--n", 60, "--replica-offset", 60,
                       "--out", s1) == 0
        full = (whole / "nibm-levels.csv").read_text()
        first = (s0 / "nibm-levels.csv").read_text()
        rest = (s1 / "nibm-levels.csv").read_text().split("\n", 1)[1]
        assert first + rest == full

    def test_interacting_runs_refuse_offsets(self, tmp_path, capsys):
        rc = run_cli("--experiment", "ordered-smc", "--d", 2,
                     "--start", "0,1", "--horizon", 1, "--n", 40,
                     "--resample-every", 1, "--seed", 3,
                     "--replica-offset", 40, "--out", tmp_path)
        assert rc == 2
        assert "do not shard" in capsys.readouterr().err


class TestArtifacts:
    def test_free_sim_dumps_event_paths(self, tmp_path):
        assert run_cli("--experiment", "free-sim", "--d", 2, "--horizon", 3,
                       "--n", 25, "--seed", 5, "--dump-paths",
                       "--out", tmp_path) == 0
        lines = (tmp_path / "free-paths.csv").read_text().splitlines()
        assert lines[0] == "replica,walker,time,value"
        # every replica opens with its start rows at time zero
        zero_rows = [ln for ln in lines[1:] if ln.split(",")[2] == "0.0"]
        assert len(zero_rows) == 25 * 2

    def test_sidecar_mirrors_resolved_params(self, tmp_path):
        assert run_cli("--experiment", "nibm", "--d", 2, "--start", "0,1",
                       "--times", "1", "--n", 20, "--seed", 4,
                       "--threads", 2, "--out", tmp_path) == 0
        side = read_json(tmp_path / "nibm-levels.csv.json")
        assert side["seed"] == 4 and side["d"] == 2
        assert "threads" not in side and "out" not in side

    def test_edge_smc_lines_are_strictly_ordered(self, tmp_path):
        # dead particles must never leak into the lines artifact
        assert run_cli("--experiment", "edge", "--source", "smc", "--d", 2,
                       "--start", "0,2", "--T", 25, "--a", 0.2, "--L", 0.3,
                       "--grid-size", 3, "--resample-every", 5, "--n", 200,
                       "--seed", 13, "--out", tmp_path) == 0
        rows = (tmp_path / "edge-lines.csv").read_text().splitlines()[1:]
        vals = {}
        for row in rows:
            rep, line, t, v = row.split(",")
            vals.setdefault((rep, t), {})[int(line)] = float(v)
        for by_line in vals.values():
            assert by_line[1] > by_line[2]

    def test_zeta_check_routes_agree(self, tmp_path):
        assert run_cli("--experiment", "zeta-check", "--n", 20000,
                       "--seed", 4, "--out", tmp_path) == 0
        j = read_json(tmp_path / "zeta-check.json")
        assert abs(j["mean"] - j["density_mean"]) < 5 * j["se"]
        assert j["density_mean"] == pytest.approx(2.5957691216, abs=1e-4)

    def test_repulsion_probe_entries_decay(self, tmp_path):
        assert run_cli("--experiment", "repulsion-probe", "--d", 2,
                       "--start", "0,1", "--times", "4,16", "--delta", 0.25,
                       "--n", 30000, "--seed", 14, "--out", tmp_path) == 0
        entries = read_json(tmp_path / "repulsion-probe.json")["entries"]
        assert entries[0]["mean"] > entries[1]["mean"] > 0


class TestCompare:
    def _write_stats(self, path, values, weights=None):
        art.statistic_csv(path, np.asarray(values, dtype=float), weights)

    def test_identical_files_give_zero_distance(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        vals = np.linspace(-1, 1, 50)
        self._write_stats(a, vals)
        self._write_stats(b, vals)
        out = tmp_path / "o"
        assert run_cli("--experiment", "compare", "--in-a", a, "--in-b", b,
                       "--seed", 1, "--out", out) == 0
        assert read_json(out / "compare.json")["ks"] == 0.0

    def test_schema_mismatch_names_columns(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,value\n0,1\n")
        good = tmp_path / "good.csv"
        self._write_stats(good, [1.0, 2.0])
        rc = run_cli("--experiment", "compare", "--in-a", bad,
                     "--in-b", good, "--seed", 1, "--out", tmp_path)
        assert rc == 2
        err = capsys.readouterr().err
        assert "replica" in err and "time" in err


class TestCustomLaw:
    def test_law_csv_feeds_the_tail_check(self, tmp_path, capsys):
        # the trimodal density that breaks the ordering diagnostics
        x = np.linspace(-6.0, 8.0, 1401)
        vals = (2.0 * np.exp(-8.0 * (x - 0.5) ** 2)
                + np.exp(-8.0 * (x - 4.0) ** 2)
                + np.exp(-2.0 * (x + 1.5) ** 2))
        from owl import increments as inc
        dens = inc.standardize_grid(x, vals)
        csv = tmp_path / "law.csv"
        csv.write_text("x,f\n" + "\n".join(
            f"{float(g)!r},{float(v)!r}"
            for g, v in zip(dens.grid, dens.values)) + "\n")
        out = tmp_path / "o"
        rc = run_cli("--experiment", "lr-check", "--law",
                     "custom-grid-density", "--law-csv", csv,
                     "--theta", "0", "--seed", 1, "--out", out)
        assert rc == 0
        report = read_json(out / "lr-check.json")
        assert report["holds_all"] is False


class TestSuiteMode:
    def test_quick_bundle_reports_and_writes_json(self, tmp_path, capsys):
        rc = run_cli("--suite", "coupling", "--quick", "--out", tmp_path)
        assert rc == 0
        out = capsys.readouterr().out
        assert "coupled-spacing-domination" in out
        report = read_json(tmp_path / "suite-coupling.json")
        assert report["scale"] == 0.01
        assert {"criterion", "passed", "checks"} <= set(report["entries"][0])

    def test_unknown_suite_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["--suite", "nonsense"])


class TestModuleEntry:
    def test_python_dash_m_owl(self, tmp_path):
        r = subprocess.run(
            [sys.executable, "-m", "owl", "--experiment", "estimate-h",
             "--d", "1", "--n", "20", "--seed", "1",
             "--out", str(tmp_path)],
            capture_output=True, text=True, cwd="/root/pkg")
        assert r.returncode == 0, r.stderr
        assert "estimate-h" in r.stdout
