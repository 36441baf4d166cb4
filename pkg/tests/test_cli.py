import json

import numpy as np
import pytest

from alphatune.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from alphatune.dataset import Dataset, save_csv
from alphatune.linmodel import load_model

FIT_SMALL = ["--synthetic", "--n-target", "150", "--n-source", "1500", "--d", "5"]
SMALL = [*FIT_SMALL, "--n-test", "300"]


def _read(path):
    return json.loads(path.read_text())


@pytest.fixture(scope="module")
def csv_pair(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    rng = np.random.default_rng(0)
    Xt = rng.standard_normal((300, 4))
    yt = (Xt @ [1.0, -1.0, 0.5, 0.0] + 0.2 * rng.standard_normal(300) > 0).astype(int)
    Xs = rng.standard_normal((3000, 4))
    # labels independent of the features, drawn from a skewed pool
    ys = rng.permutation(np.r_[np.ones(2400, dtype=int), np.zeros(600, dtype=int)])
    save_csv(Dataset(Xt, yt), root / "target.csv")
    save_csv(Dataset(Xs, ys), root / "source.csv")
    return root


class TestFit:
    def test_defaults_echoed(self, tmp_path, csv_pair):
        out = tmp_path / "run"
        code = main(["fit", "--target", str(csv_pair / "target.csv"),
                     "--source", str(csv_pair / "source.csv"), "--out", str(out)])
        assert code == EXIT_OK
        rep = _read(out / "report.json")
        assert rep["delta"] == 0.01 and rep["k"] == 5
        assert rep["schema"] == "alphatune-report/1"
        model, meta = load_model(out / "model.txt")
        assert model.d == 4
        assert (out / "trace.tsv").read_text().startswith("# strategy=gss")

    def test_noise_source_gives_alpha_one(self, tmp_path, csv_pair):
        out = tmp_path / "run"
        main(["fit", "--target", str(csv_pair / "target.csv"),
              "--source", str(csv_pair / "source.csv"), "--out", str(out), "--no-timing"])
        # exact up to the search precision delta
        assert _read(out / "report.json")["alpha_star"] >= 1.0 - 0.01

    def test_missing_source_leaves_nothing(self, tmp_path, csv_pair, capsys):
        out = tmp_path / "run"
        code = main(["fit", "--target", str(csv_pair / "target.csv"),
                     "--source", str(tmp_path / "missing.csv"), "--out", str(out)])
        assert code == EXIT_IO
        assert not out.exists() or not any(out.iterdir())
        assert "missing.csv" in capsys.readouterr().err

    def test_bad_delta(self, tmp_path):
        assert main(["fit", *FIT_SMALL, "--delta", "0.7"]) == EXIT_VALIDATION

    def test_bad_k(self, tmp_path):
        assert main(["fit", *FIT_SMALL, "--k", "1"]) == EXIT_VALIDATION

    def test_malformed_csv(self, tmp_path, csv_pair, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c,d,y\n1,2,3,4,0\n1,2,x,4,1\n")
        code = main(["fit", "--target", str(bad), "--source", str(csv_pair / "source.csv")])
        assert code == EXIT_VALIDATION
        assert "bad.csv:3:" in capsys.readouterr().err

    def test_needs_data(self):
        assert main(["fit"]) == EXIT_VALIDATION


class TestReproducibility:
    def test_benchmark_byte_identical(self, tmp_path):
        args = ["benchmark", *SMALL, "--methods", "target,source,all,crosstrainer", "--no-timing"]
        assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main([*args, "--out", str(tmp_path / "b")]) == EXIT_OK
        for name in ("report.json", "table.tsv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_timing_section(self, tmp_path, capsys):
        out = tmp_path / "t"
        assert main(["benchmark", *SMALL, "--delta", "0.1", "--out", str(out)]) == EXIT_OK
        rep = _read(out / "report.json")
        names = [r["method"] for r in rep["rows"]]
        assert names[:4] == ["target", "source", "all", "crosstrainer"]
        assert {"pred", "import", "feataug", "crosstrainer_unopt"} <= set(names)
        t = rep["timing"]
        assert t["speedup"] == pytest.approx(t["baseline"]["seconds"] / t["gss_warm"]["seconds"])
        assert "speedup" in capsys.readouterr().out


class TestOtherCommands:
    def test_sweep_sigma_echoes_order(self, tmp_path):
        out = tmp_path / "s"
        code = main(["sweep-sigma", *SMALL, "--sigmas", "4,0,1", "--delta", "0.1",
                     "--methods", "target,source,all,crosstrainer", "--out", str(out), "--no-timing"])
        assert code == EXIT_OK
        rep = _read(out / "report.json")
        assert [row["sigma"] for row in rep["table"]] == [4.0, 0.0, 1.0]

    def test_sweep_rejects_negative(self):
        assert main(["sweep-sigma", *SMALL, "--sigmas", "1,-1"]) == EXIT_VALIDATION

    def test_search_trace(self, tmp_path):
        out = tmp_path / "tr"
        assert main(["search-trace", *SMALL, "--n-random", "10", "--out", str(out)]) == EXIT_OK
        traces = _read(out / "report.json")["traces"]
        assert len(traces["grid"]["probes"]) == 101
        assert len(traces["gss"]["probes"]) <= 25
        for t in traces.values():
            best = t["best_so_far"]
            assert all(b >= a for a, b in zip(best, best[1:]))

    def test_bound(self, tmp_path, capsys):
        out = tmp_path / "b"
        assert main(["bound", "--beta", "0.5", "--A", "0.1", "--out", str(out)]) == EXIT_OK
        rep = _read(out / "report.json")
        assert rep["convex"] is True
        row = next(r for r in rep["table"] if r["alpha"] == 0.5)
        assert row["g"] == pytest.approx(2.1)

    def test_bound_bad_beta(self):
        assert main(["bound", "--beta", "1.5"]) == EXIT_VALIDATION
