import io
import json

import numpy as np
import pytest

from distreg import make_discrete
from distreg.cli import main, read_distribution, write_distribution

from conftest import random_discrete


def write(path, text):
    path.write_text(text)
    return str(path)


def dist_csv(path, dist):
    with open(path, "w", newline="") as handle:
        write_distribution(dist, handle)
    return str(path)


class TestDistributionIO:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        for dim in (1, 2, 3):
            d = random_discrete(rng, max_support=9, dim=dim)
            path = dist_csv(tmp_path / f"d{dim}.csv", d)
            back = read_distribution(path)
            assert np.array_equal(back.atoms, d.atoms)
            assert np.array_equal(back.weights, d.weights)

    def test_schema_errors(self, tmp_path):
        from distreg.cli import DataError

        bad = write(tmp_path / "bad.csv", "a,weight\n0,1\n")
        with pytest.raises(DataError, match="y1"):
            read_distribution(bad)


class TestDistanceCommand:
    def test_dirac_pair(self, tmp_path, capsys):
        a = write(tmp_path / "a.csv", "y1,weight\n0,1\n")
        b = write(tmp_path / "b.csv", "y1,weight\n1,1\n")
        assert main(["distance", a, b, "--order", "1"]) == 0
        assert capsys.readouterr().out.strip() == "1"

    def test_quantile_equals_cdf_route(self, tmp_path, capsys, rng):
        da = random_discrete(rng, max_support=10)
        db = random_discrete(rng, max_support=10)
        a = dist_csv(tmp_path / "a.csv", da)
        b = dist_csv(tmp_path / "b.csv", db)
        main(["distance", a, b, "--method", "quantile", "--order", "1"])
        v1 = float(capsys.readouterr().out)
        main(["distance", a, b, "--method", "cdf"])
        v2 = float(capsys.readouterr().out)
        assert abs(v1 - v2) <= 1e-10

    def test_malformed_weight_column(self, tmp_path, capsys):
        a = write(tmp_path / "a.csv", "y1,weight\n0,1\n")
        bad = write(tmp_path / "bad.csv", "y1,weight\n0,0.5\n1,zzz\n")
        assert main(["distance", a, bad]) == 3
        err = capsys.readouterr().err
        assert "line 3" in err

    def test_sliced_prints_stderr_column(self, tmp_path, capsys):
        a = dist_csv(tmp_path / "a.csv", make_discrete([[0.0, 0.0]], [1.0]))
        b = dist_csv(tmp_path / "b.csv", make_discrete([[1.0, 0.0]], [1.0]))
        assert (
            main(["distance", a, b, "--method", "sliced", "--order", "2",
                  "--directions", "512", "--seed", "4"])
            == 0
        )
        parts = capsys.readouterr().out.split()
        assert len(parts) == 2
        assert abs(float(parts[0]) - np.sqrt(0.5)) < 0.05

    def test_method_dimension_mismatch(self, tmp_path, capsys):
        a = dist_csv(tmp_path / "a.csv", make_discrete([0.0, 1.0], [0.5, 0.5]))
        b = dist_csv(tmp_path / "b.csv", make_discrete([0.5], [1.0]))
        assert main(["distance", a, b, "--method", "sliced"]) == 2

    def test_auto_picks_exact_for_small_2d(self, tmp_path, capsys):
        a = dist_csv(tmp_path / "a.csv", make_discrete([[0.0, 0.0]], [1.0]))
        b = dist_csv(tmp_path / "b.csv", make_discrete([[3.0, 4.0]], [1.0]))
        assert main(["distance", a, b, "--order", "2"]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(5.0)


class TestPredictCommand:
    def test_marginal_median_with_full_neighborhood(self, tmp_path, capsys):
        train = write(
            tmp_path / "train.csv",
            "x1,y1\n0.1,5\n0.5,1\n0.9,3\n",
        )
        queries = write(tmp_path / "q.csv", "x1\n0.2\n0.8\n")
        rc = main(
            ["predict", "--train", train, "--queries", queries,
             "--scheme", "knn", "--kappa", "3", "--functional", "quantile:0.5"]
        )
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "query,value"
        assert [line.split(",")[1] for line in lines[1:]] == ["3", "3"]

    def test_long_format_weights(self, tmp_path, capsys):
        train = write(tmp_path / "train.csv", "x1,y1\n0.1,0\n0.2,10\n0.9,100\n")
        queries = write(tmp_path / "q.csv", "x1\n0.15\n")
        rc = main(
            ["predict", "--train", train, "--queries", queries,
             "--scheme", "knn", "--kappa", "2"]
        )
        assert rc == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0] == "query,y1,weight"
        assert out[1:] == ["0,0,0.5", "0,10,0.5"]

    def test_cte_stays_in_response_range(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        rows = "".join(
            f"{x:.6f},{y}\n"
            for x, y in zip(rng.random(40), rng.choice([0.0, 2.0], size=40))
        )
        train = write(tmp_path / "train.csv", "x1,y1\n" + rows)
        queries = write(tmp_path / "q.csv", "x1\n0.5\n")
        main(
            ["predict", "--train", train, "--queries", queries,
             "--scheme", "kernel", "--bandwidth", "0.3", "--functional", "cte:0.9"]
        )
        value = float(capsys.readouterr().out.strip().splitlines()[1].split(",")[1])
        assert 0.0 <= value <= 2.0

    def test_deterministic_outputs(self, tmp_path):
        train = write(tmp_path / "train.csv", "x1,y1\n0.1,0\n0.2,10\n0.9,100\n")
        queries = write(tmp_path / "q.csv", "x1\n0.15\n0.6\n")
        out1, out2 = str(tmp_path / "o1.csv"), str(tmp_path / "o2.csv")
        for out in (out1, out2):
            main(
                ["predict", "--train", train, "--queries", queries,
                 "--scheme", "kernel", "--bandwidth", "0.25", "--out", out]
            )
        assert open(out1).read() == open(out2).read()

    def test_kappa_exceeding_n(self, tmp_path, capsys):
        train = write(tmp_path / "train.csv", "x1,y1\n0.1,0\n")
        queries = write(tmp_path / "q.csv", "x1\n0.2\n")
        rc = main(
            ["predict", "--train", train, "--queries", queries,
             "--scheme", "knn", "--kappa", "5"]
        )
        assert rc == 2


class TestRatesCommand:
    def test_dry_run_touches_nothing(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = write(tmp_path / "r.cfg", "preset=binary-k1-kernel\n")
        assert main(["rates", "--config", cfg, "--dry-run"]) == 0
        out = capsys.readouterr().out
        assert "binary-k1" in out
        assert not list(tmp_path.glob("*.csv"))

    def test_small_run_writes_files(self, tmp_path, capsys):
        cfg = write(
            tmp_path / "r.cfg",
            "preset=binary-k1-kernel\n"
            "n_grid=128,256,512\n"
            "replications=6\n"
            "test_points=8\n"
            "tolerance=0.5\n"
            f"out_prefix={tmp_path / 'rates'}\n",
        )
        rc = main(["rates", "--config", cfg])
        assert rc == 0
        payload = json.load(open(tmp_path / "rates.json"))
        assert payload["passed"] is True
        assert len(payload["points"]) == 3
        assert (tmp_path / "rates.csv").exists()

    def test_invalid_schedule_exit_code(self, tmp_path, capsys):
        cfg = write(
            tmp_path / "r.cfg",
            "model=binary-k1\n"
            "schedule=kappa-fixed:5\n"
            "n_grid=128,512,2048\n"
            "replications=8\n"
            "test_points=8\n"
            "target=-0.3333333\n"
            f"out_prefix={tmp_path / 'rates'}\n",
        )
        assert main(["rates", "--config", cfg]) == 1

    def test_bad_config_key_combination(self, tmp_path, capsys):
        cfg = write(tmp_path / "r.cfg", "model=binary-k1\n")
        assert main(["rates", "--config", cfg]) == 2


class TestBoundsCommand:
    def test_kernel_echoes_covering_constant(self, capsys):
        rc = main(
            ["bounds", "--family", "kernel", "--holder", "1", "--lipschitz", "1",
             "--dispersion", "1", "--dim", "1", "--n", "100,200", "--param", "0.1"]
        )
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "n,bandwidth,bound,covering_const"
        assert len(lines) == 3
        assert all(line.endswith(",1") for line in lines[1:])

    def test_knn_requires_tilde_ck_in_dim2(self, capsys):
        rc = main(
            ["bounds", "--family", "knn", "--holder", "1", "--lipschitz", "1",
             "--dispersion", "1", "--dim", "2", "--n", "100", "--param", "10"]
        )
        assert rc == 2
        rc = main(
            ["bounds", "--family", "knn", "--holder", "1", "--lipschitz", "1",
             "--dispersion", "1", "--dim", "2", "--n", "100", "--param", "10",
             "--tilde-ck", "4"]
        )
        assert rc == 0

    def test_bound_decreases_in_n_at_fixed_param(self, capsys):
        main(
            ["bounds", "--family", "knn", "--holder", "1", "--lipschitz", "1",
             "--dispersion", "1", "--dim", "1", "--n", "100,1000,10000",
             "--param", "30"]
        )
        lines = capsys.readouterr().out.strip().splitlines()[1:]
        vals = [float(line.split(",")[2]) for line in lines]
        assert vals == sorted(vals, reverse=True)


class TestOtherCommands:
    def test_stone_check(self, capsys):
        rc = main(
            ["stone-check", "--model", "binary-k1", "--family", "knn",
             "--kappa-schedule", "1:0.5", "--n-grid", "64,256",
             "--replications", "4", "--seed", "2"]
        )
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("n,max_weight")
        assert len(lines) == 3

    def test_certify(self, capsys):
        assert main(["certify", "--model", "binary-k1", "--resolution", "32"]) == 0
        assert "passes=True" in capsys.readouterr().out

    def test_unknown_command_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_env_seed_override(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("DISTREG_SEED", "99")
        from distreg.cli import _default_seed

        assert _default_seed() == 99
