import hashlib
import json
import os

import numpy as np
import pytest

from hbac.cli import main
from hbac.harness import (
    ExperimentConfig,
    build_config,
    parse_config_file,
    run_circuit,
    run_converge,
    run_nbds,
    run_noise,
    run_spectrum,
    worker_count,
)
from hbac.errors import ValidationError
from hbac.state import DiagonalState, ResetSpec, make_thermal


class TestParseConfigFile:
    def test_basic_keys(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("n=4\nepsilon=0.1\n# a comment\nxi=1e-6  # trailing comment\n\nout=results\n")
        values = parse_config_file(str(p))
        assert values == {"n": "4", "epsilon": "0.1", "xi": "1e-6", "out": "results"}

    def test_later_key_wins(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("n=4\nn=6\n")
        assert parse_config_file(str(p))["n"] == "6"

    def test_rejects_bad_line(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("n 4\n")
        with pytest.raises(ValidationError):
            parse_config_file(str(p))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            parse_config_file(str(tmp_path / "nope.cfg"))


class TestBuildConfig:
    def test_defaults(self):
        cfg = build_config("converge")
        assert cfg.n == 2 and cfg.epsilon == 0.1 and cfg.xi == 1e-6
        assert cfg.max_iters == 200_000

    def test_noise_defaults(self):
        cfg = build_config("noise")
        assert cfg.sigma_list == (0.0, 0.05, 0.1, 0.5)
        assert cfg.seeds == tuple(range(20))
        assert cfg.max_iters == 500

    def test_file_values_applied(self):
        cfg = build_config("converge", {"n": "5", "epsilon": "0.2", "seeds": "1,2,3"})
        assert cfg.n == 5 and cfg.epsilon == 0.2 and cfg.seeds == (1, 2, 3)

    def test_overrides_beat_file(self):
        cfg = build_config("converge", {"n": "5"}, {"n": 7})
        assert cfg.n == 7

    def test_none_override_keeps_file_value(self):
        cfg = build_config("converge", {"n": "5"}, {"n": None})
        assert cfg.n == 5

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            build_config("converge", {"qubits": "3"})

    def test_experiment_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            build_config("converge", {"experiment": "noise"})

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ValidationError):
            build_config("anneal")

    @pytest.mark.parametrize("overrides", [
        {"n": 0},
        {"epsilon": -0.5},
        {"epsilon": 0.0},
        {"xi": 1.5},
        {"max_iters": 0},
        {"initial": "warm"},
        {"initial": "custom"},
    ])
    def test_invalid_values_rejected(self, overrides):
        with pytest.raises(ValidationError):
            build_config("converge", {}, overrides)

    def test_noise_needs_seeds_and_sigmas(self):
        with pytest.raises(ValidationError):
            build_config("noise", {}, {"seeds": ()})
        with pytest.raises(ValidationError):
            build_config("noise", {}, {"sigma_list": ()})
        with pytest.raises(ValidationError):
            build_config("noise", {}, {"sigma_list": (-0.1,)})

    def test_exponent_guard_applies(self):
        with pytest.raises(ValidationError):
            build_config("converge", {}, {"n": 13, "epsilon": 0.1})


class TestContentHash:
    def test_matches_git_blob_construction(self):
        cfg = build_config("spectrum", {}, {"n": 3})
        payload = cfg.canonical_text().encode()
        expected = hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()
        assert cfg.content_hash() == expected

    def test_stable_and_sensitive(self):
        a = build_config("spectrum", {}, {"n": 3})
        b = build_config("spectrum", {}, {"n": 3})
        c = build_config("spectrum", {}, {"n": 4})
        assert a.content_hash() == b.content_hash()
        assert a.content_hash() != c.content_hash()


class TestWorkerCount:
    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("HBAC_THREADS", "2")
        assert worker_count(100) == 2

    def test_capped_by_jobs(self, monkeypatch):
        monkeypatch.setenv("HBAC_THREADS", "16")
        assert worker_count(3) == 3

    def test_invalid_env_rejected(self, monkeypatch):
        monkeypatch.setenv("HBAC_THREADS", "many")
        with pytest.raises(ValidationError):
            worker_count(4)
        monkeypatch.setenv("HBAC_THREADS", "0")
        with pytest.raises(ValidationError):
            worker_count(4)

    def test_default_uses_cpu_count(self, monkeypatch):
        monkeypatch.delenv("HBAC_THREADS", raising=False)
        assert 1 <= worker_count(10_000) <= (os.cpu_count() or 1)


def _cfg(experiment, tmp_path, **kw):
    kw.setdefault("output_path", str(tmp_path / experiment))
    kw.setdefault("plots", False)
    return build_config(experiment, {}, kw)


class TestRunConverge:
    def test_single_computation_qubit_converges_immediately(self, tmp_path):
        record = run_converge(_cfg("converge", tmp_path, n=1))
        summary = json.loads((tmp_path / "converge" / "converge_summary.json").read_text())
        assert summary["tsac"]["t_mix_empirical"] == 1
        assert summary["ppa"]["t_mix_empirical"] == 1
        assert summary["bound_satisfied"] is True
        assert "converge.csv" in record["result_files"]

    def test_csv_schema(self, tmp_path):
        run_converge(_cfg("converge", tmp_path, n=2))
        lines = (tmp_path / "converge" / "converge.csv").read_text().splitlines()
        assert lines[0] == "protocol,iter,tv_to_prev,tv_to_oas,pol_q0,nbds"
        first = lines[1].split(",")
        assert first[0] == "tsac" and first[1] == "1" and first[5] == ""
        ppa_rows = [l for l in lines[1:] if l.startswith("ppa,")]
        assert ppa_rows and all(row.split(",")[5] != "" for row in ppa_rows)

    def test_deterministic_bytes(self, tmp_path):
        run_converge(_cfg("converge", tmp_path / "a", n=2))
        run_converge(_cfg("converge", tmp_path / "b", n=2))
        a = (tmp_path / "a" / "converge" / "converge.csv").read_bytes()
        b = (tmp_path / "b" / "converge" / "converge.csv").read_bytes()
        assert a == b

    def test_run_record_contents(self, tmp_path):
        cfg = _cfg("converge", tmp_path, n=1)
        run_converge(cfg)
        record = json.loads((tmp_path / "converge" / "run_record.json").read_text())
        assert record["content_hash"] == cfg.content_hash()
        assert record["config"]["n"] == 1
        assert "converge_summary.json" in record["result_files"]
        assert record["started"] <= record["finished"]

    def test_custom_initial_state(self, tmp_path):
        state = make_thermal(3, ResetSpec(0.1))
        path = tmp_path / "init.csv"
        path.write_text(state.to_csv())
        record = run_converge(_cfg("converge", tmp_path, n=2, initial=f"custom:{path}"))
        assert "converge.csv" in record["result_files"]

    def test_custom_initial_wrong_width(self, tmp_path):
        path = tmp_path / "init.csv"
        path.write_text(make_thermal(2, ResetSpec(0.1)).to_csv())
        with pytest.raises(ValidationError):
            run_converge(_cfg("converge", tmp_path, n=2, initial=f"custom:{path}"))


class TestRunSpectrum:
    def test_report_written(self, tmp_path):
        run_spectrum(_cfg("spectrum", tmp_path, n=3, epsilon=0.5))
        data = json.loads((tmp_path / "spectrum" / "spectrum.json").read_text())
        assert data["max_abs_error"] < 1e-9
        assert len(data["numeric_eigenvalues"]) == 8

    def test_figure_rendered_when_plots_on(self, tmp_path):
        cfg = build_config("spectrum", {}, {
            "n": 2, "output_path": str(tmp_path / "s"), "plots": True,
        })
        run_spectrum(cfg)
        png = tmp_path / "s" / "spectrum.png"
        assert png.exists() and png.stat().st_size > 1000


class TestRunNbds:
    def test_csv_schema_and_sweep(self, tmp_path):
        run_nbds(_cfg("nbds", tmp_path, n=4, max_iters=30))
        lines = (tmp_path / "nbds" / "nbds.csv").read_text().splitlines()
        assert lines[0] == "n,epsilon,iter,nbds_incl,nbds_excl"
        swept = sorted({int(line.split(",")[0]) for line in lines[1:]})
        assert swept == [2, 3, 4]
        summary = json.loads((tmp_path / "nbds" / "nbds_summary.json").read_text())
        assert set(summary["max_nbds_per_n"]) == {"2", "3", "4"}


class TestRunNoise:
    def test_outputs_and_determinism_across_thread_counts(self, tmp_path, monkeypatch):
        kw = dict(n=2, epsilon=0.02, sigma_list=(0.0, 0.5), seeds=(0, 1, 2), max_iters=25)
        monkeypatch.setenv("HBAC_THREADS", "1")
        run_noise(_cfg("noise", tmp_path / "a", **kw))
        monkeypatch.setenv("HBAC_THREADS", "4")
        run_noise(_cfg("noise", tmp_path / "b", **kw))
        for name in ("noise.csv", "noise_band.csv", "noise_tsac.csv"):
            a = (tmp_path / "a" / "noise" / name).read_bytes()
            b = (tmp_path / "b" / "noise" / name).read_bytes()
            assert a == b

    def test_noise_csv_schema(self, tmp_path):
        run_noise(_cfg("noise", tmp_path, n=2, epsilon=0.02,
                       sigma_list=(0.0,), seeds=(0,), max_iters=5))
        lines = (tmp_path / "noise" / "noise.csv").read_text().splitlines()
        assert lines[0] == "sigma,seed,iter,pol_q0"
        assert len(lines) == 6
        band = (tmp_path / "noise" / "noise_band.csv").read_text().splitlines()
        assert band[0] == "sigma,iter,pol_mean,pol_min,pol_max"

    def test_tsac_reference_ignores_sigma(self, tmp_path):
        run_noise(_cfg("noise", tmp_path / "a", n=2, epsilon=0.02,
                       sigma_list=(0.0,), seeds=(0,), max_iters=20))
        run_noise(_cfg("noise", tmp_path / "b", n=2, epsilon=0.02,
                       sigma_list=(0.3, 0.9), seeds=(5,), max_iters=20))
        a = (tmp_path / "a" / "noise" / "noise_tsac.csv").read_bytes()
        b = (tmp_path / "b" / "noise" / "noise_tsac.csv").read_bytes()
        assert a == b


class TestRunCircuit:
    def test_outputs(self, tmp_path):
        record = run_circuit(_cfg("circuit", tmp_path, n=4))
        out = tmp_path / "circuit"
        for m in (2, 3, 4):
            assert (out / f"two_sort_m{m}.txt").exists()
        counts = (out / "gate_counts.csv").read_text().splitlines()
        assert counts[0] == "m,total,expanded_total,ratio_expanded_over_m2"
        assert len(counts) == 12  # m = 2..12
        summary = json.loads((out / "circuit_verification.json").read_text())
        assert summary["verified_m"] == [2, 3, 4]
        assert summary["fitted_c"] == 32 / 9
        assert all(v["max_error"] < 1e-9 for v in summary["verification"])
        assert "gate_counts.csv" in record["result_files"]

    def test_rejects_unverifiable_width(self, tmp_path):
        with pytest.raises(ValidationError):
            run_circuit(_cfg("circuit", tmp_path, n=11))


class TestCli:
    def test_spectrum_exit_zero(self, tmp_path, capsys):
        rc = main(["spectrum", "--n", "2", "--out", str(tmp_path / "s"), "--no-plots"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "spectrum.json" in out and "run_record.json" in out

    def test_validation_failure_exits_two(self, tmp_path, capsys):
        rc = main(["converge", "--epsilon", "-1", "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_bound_violation_exits_three(self, tmp_path, capsys):
        rc = main(["converge", "--n", "4", "--iters", "3",
                   "--out", str(tmp_path / "x"), "--no-plots"])
        assert rc == 3
        assert "bound violation:" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(f"n=3\nepsilon=0.5\nout={tmp_path / 'from_file'}\n")
        rc = main(["spectrum", "--config", str(cfg), "--n", "2", "--no-plots"])
        assert rc == 0
        record = json.loads((tmp_path / "from_file" / "run_record.json").read_text())
        assert record["config"]["n"] == 2
        assert record["config"]["epsilon"] == 0.5

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["anneal"])
        assert exc.value.code == 2

    def test_bad_sigma_list_exits_two(self, tmp_path, capsys):
        rc = main(["noise", "--sigma", "0.1,zap", "--out", str(tmp_path / "n")])
        assert rc == 2
