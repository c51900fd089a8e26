import json

import pytest

from rrdigraph.cli import main
from rrdigraph.matrices import format_matrix, parse_matrices, parse_matrix


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSample:
    def test_writes_matrices_and_echoes_config(self, tmp_path, capsys):
        out = tmp_path / "mats.txt"
        code, stdout, _ = run(
            capsys,
            "sample", "--kind", "switch_mcmc", "--n", "6", "--d", "2",
            "--steps", "100", "--seed", "3", "--count", "3", "--out", str(out),
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["schema_version"] == 1
        assert payload["config"]["steps"] == 100
        assert payload["config"]["m"] == 6  # defaults filled
        mats = parse_matrices(out.read_text())
        assert len(mats) == 3
        for mat in mats:
            mat.validate()

    def test_stdout_matrix_when_no_out(self, capsys):
        code, stdout, _ = run(
            capsys, "sample", "--kind", "switch_mcmc", "--n", "4", "--d", "2",
            "--steps", "0",
        )
        assert code == 0
        assert stdout.startswith("4 4 2 2\n")
        parse_matrix(stdout)

    def test_rejection_guard_exit_code(self, capsys):
        code, _, err = run(
            capsys,
            "sample", "--kind", "rejection", "--n", "50", "--d", "20",
            "--max-attempts", "1500",
        )
        assert code == 3
        assert "resource guard" in err

    def test_permutation_model_json(self, capsys):
        code, stdout, _ = run(
            capsys, "sample", "--kind", "permutation_model", "--n", "5", "--d", "2",
        )
        assert code == 0
        payload = json.loads(stdout)
        assert len(payload["samples"][0]) == 2  # d permutations

    def test_determinism(self, tmp_path, capsys):
        args = ("sample", "--kind", "rejection", "--n", "8", "--d", "2",
                "--seed", "5", "--count", "4")
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        run(capsys, *args, "--out", str(a))
        run(capsys, *args, "--out", str(b))
        assert a.read_text() == b.read_text()


class TestStatsRoundTrip:
    def test_sample_then_stats_reads_identical_matrix(self, tmp_path, capsys):
        src = tmp_path / "m.txt"
        run(capsys, "sample", "--kind", "switch_mcmc", "--n", "6", "--d", "3",
            "--steps", "200", "--seed", "4", "--out", str(src))
        echo = tmp_path / "echo.txt"
        code, stdout, _ = run(capsys, "stats", "--in", str(src), "--out", str(echo))
        assert code == 0
        report = json.loads(stdout)
        assert (report["m"], report["n"], report["d"], report["dp"]) == (6, 6, 3, 3)
        assert echo.read_bytes() == src.read_bytes()  # bit-exact round trip
        mat = parse_matrix(src.read_text())
        assert report["edges"] == mat.m * mat.d

    def test_rejects_malformed_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("2 2 1 1\n10\n10\n")
        code, _, err = run(capsys, "stats", "--in", str(bad))
        assert code == 1
        assert "column" in err


class TestCouple:
    @pytest.fixture()
    def block_matrix_file(self, tmp_path):
        from conftest import matrix_from_strings

        mat = matrix_from_strings(["1100", "1100", "0011", "0011"])
        path = tmp_path / "block.txt"
        path.write_text(format_matrix(mat))
        return path, mat

    def test_switch_applied(self, block_matrix_file, tmp_path, capsys):
        path, mat = block_matrix_file
        out = tmp_path / "switched.txt"
        code, stdout, _ = run(
            capsys, "couple", "--op", "switch", "--i1", "0", "--i2", "2",
            "--j1", "0", "--j2", "2", "--in", str(path), "--out", str(out),
        )
        assert code == 0
        assert json.loads(stdout)["applied"] is True
        switched = parse_matrix(out.read_text())
        assert switched != mat
        switched.validate()

    def test_switch_noop_exit_4(self, block_matrix_file, tmp_path, capsys):
        path, _ = block_matrix_file
        code, stdout, _ = run(
            capsys, "couple", "--op", "switch", "--i1", "0", "--i2", "1",
            "--j1", "0", "--j2", "1", "--in", str(path),
        )
        assert code == 4
        assert json.loads(stdout)["applied"] is False

    def test_reflect_applied(self, block_matrix_file, tmp_path, capsys):
        path, mat = block_matrix_file
        out = tmp_path / "reflected.txt"
        code, _, _ = run(
            capsys, "couple", "--op", "reflect", "--j1", "0", "--j2", "2",
            "--in", str(path), "--out", str(out),
        )
        assert code == 0
        reflected = parse_matrix(out.read_text())
        assert reflected != mat
        # applying the same reflection again restores the original
        back = tmp_path / "back.txt"
        code, _, _ = run(
            capsys, "couple", "--op", "reflect", "--j1", "0", "--j2", "2",
            "--in", str(out), "--out", str(back),
        )
        assert code == 0
        assert parse_matrix(back.read_text()) == mat


class TestVerifyCli:
    def test_reflection_suite_passes(self, capsys):
        code, stdout, _ = run(
            capsys, "verify", "--suite", "reflection", "--n", "16", "--d", "4",
            "--samples", "40", "--seed", "2",
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["ok"] is True
        suite = payload["suites"][0]
        assert suite["suite"] == "reflection"
        assert all(rec["status"] == "pass" for rec in suite["records"])

    def test_all_suites(self, capsys):
        code, stdout, _ = run(
            capsys, "verify", "--suite", "all", "--n", "10", "--d", "3",
            "--samples", "15", "--seed", "3",
        )
        assert code == 0
        payload = json.loads(stdout)
        assert [s["suite"] for s in payload["suites"]] == [
            "reflection", "switching", "permutation",
        ]

    def test_csv_format(self, capsys):
        code, stdout, _ = run(
            capsys, "verify", "--suite", "permutation", "--n", "8", "--d", "2",
            "--samples", "10", "--format", "csv",
        )
        assert code == 0
        assert stdout.startswith("suite,invariant,status,checked,worst_margin")


class TestBoundCli:
    def test_edge_twosided_at_zero_prints_two(self, capsys):
        code, stdout, _ = run(
            capsys, "bound", "--theorem", "edge_twosided", "--tau", "0",
            "--n", "10", "--d", "3", "--a", "2", "--b", "2",
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["bound"] == 2.0
        assert payload["valid"] is True
        assert payload["config"]["deviation"] == 0.0

    def test_constant_sources_reported(self, capsys):
        _, stdout, _ = run(
            capsys, "bound", "--theorem", "er_edge", "--eps", "1", "--n", "30",
            "--p", "0.2", "--a", "5", "--b", "5",
        )
        payload = json.loads(stdout)
        assert payload["constants"]["c"]["source"] == "chosen"

    def test_usage_error_exit_1(self, capsys):
        code, _, err = run(capsys, "bound", "--theorem", "no_such_theorem")
        assert code == 1
        assert "usage error" in err


class TestTailCli:
    def _config(self, tmp_path):
        cfg = {
            "sampler": {"kind": "permutation_model", "n": 40, "d": 3},
            "statistic": "perm_edge_count",
            "grid": [0.5, 1.0],
            "N": 3000,
            "seed": 17,
            "a": 12,
            "b": 12,
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_writes_csv_and_sidecar(self, tmp_path, capsys):
        cfg = self._config(tmp_path)
        out = tmp_path / "tail.csv"
        code, stdout, _ = run(capsys, "tail", "--config", str(cfg), "--out", str(out))
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "grid_value,empirical,ci_lo,ci_hi,bound,valid,verdict"
        assert len(lines) == 3
        sidecar = tmp_path / "tail.csv.meta.json"
        meta = json.loads(sidecar.read_text())
        assert meta["config"]["N"] == 3000
        assert meta["schema_version"] == 1

    def test_byte_identical_reruns(self, tmp_path, capsys):
        cfg = self._config(tmp_path)
        out1 = tmp_path / "t1.csv"
        out2 = tmp_path / "t2.csv"
        run(capsys, "tail", "--config", str(cfg), "--out", str(out1))
        run(capsys, "tail", "--config", str(cfg), "--out", str(out2), "--threads", "4")
        assert out1.read_bytes() == out2.read_bytes()
        meta1 = json.loads((tmp_path / "t1.csv.meta.json").read_text())
        meta2 = json.loads((tmp_path / "t2.csv.meta.json").read_text())
        meta1.pop("wall_time_s")
        meta2.pop("wall_time_s")
        assert meta1 == meta2


class TestSigma2Cli:
    def test_from_file(self, tmp_path, capsys):
        from conftest import matrix_from_strings

        mat = matrix_from_strings(["111", "111", "111"])
        path = tmp_path / "full.txt"
        path.write_text(format_matrix(mat))
        code, stdout, _ = run(capsys, "sigma2", "--in", str(path), "--alpha")
        assert code == 0
        payload = json.loads(stdout)
        assert payload["sigma1"] == pytest.approx(3.0, abs=1e-9)
        assert payload["sigma2"] == pytest.approx(0.0, abs=1e-9)
        assert payload["alpha_exact"] == pytest.approx(0.0, abs=1e-12)

    def test_from_sampler(self, capsys):
        code, stdout, _ = run(
            capsys, "sigma2", "--kind", "switch_mcmc", "--n", "10", "--d", "3",
            "--steps", "300", "--seed", "9",
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["converged"] is True

    def test_needs_source(self, capsys):
        code, _, err = run(capsys, "sigma2")
        assert code == 1


class TestEnumerateCli:
    def test_count_only(self, capsys):
        code, stdout, _ = run(capsys, "enumerate", "--n", "4", "--d", "2",
                              "--count-only")
        assert code == 0
        assert json.loads(stdout)["count"] == 90

    def test_writes_class(self, tmp_path, capsys):
        out = tmp_path / "class.txt"
        code, _, _ = run(capsys, "enumerate", "--n", "3", "--d", "1",
                         "--out", str(out))
        assert code == 0
        mats = parse_matrices(out.read_text())
        assert len(mats) == 6

    def test_guard_exit_3(self, capsys):
        code, _, err = run(capsys, "enumerate", "--n", "12", "--d", "5",
                           "--count-only")
        assert code == 3


class TestUsageErrors:
    def test_unknown_flag(self, capsys):
        code, _, err = run(capsys, "sample", "--kind", "rejection", "--n", "4",
                           "--d", "2", "--frobnicate")
        assert code == 1

    def test_unknown_subcommand(self, capsys):
        code, _, _ = run(capsys, "frobnicate")
        assert code == 1

    def test_bad_value(self, capsys):
        code, _, _ = run(capsys, "sample", "--kind", "rejection", "--n", "9",
                         "--d", "3", "--m", "6", "--dp", "3")
        assert code == 1
