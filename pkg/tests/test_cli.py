"""Command-line front end, run in-process through ``main``."""
import csv
import io

import numpy as np
import pytest

from degest.cli import main
from degest.estimators import bayes_estimate
from degest.graph import load_edge_list
from degest.priors import read_pmf_csv


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestGenerate:
    def test_complete_er(self, tmp_path, capsys):
        out = tmp_path / "g.txt"
        assert run("generate", "--model", "er", "--N", 5, "--pe", 1, "--seed", 1, "-o", out) == 0
        g = load_edge_list(out.read_bytes())
        assert g.num_edges == 10
        assert "edges=10" in capsys.readouterr().out

    def test_powerlaw_sparsity(self, tmp_path):
        out = tmp_path / "g.txt"
        assert run("generate", "--model", "powerlaw", "--N", 1000, "--m", 2, "--s", 0.01,
                   "-o", out) == 0
        g = load_edge_list(out.read_bytes())
        assert abs(g.num_edges / (1000 * 999 / 2) / 0.01 - 1) <= 0.10

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for path in (a, b):
            run("generate", "--model", "er", "--N", 80, "--pe", 0.1, "--seed", 4, "-o", path)
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_output(self, tmp_path):
        assert run("generate", "--N", 5, "--pe", 0.5, "-o", tmp_path / "no" / "g.txt") == 1

    def test_missing_parameter(self, capsys):
        assert run("generate", "--model", "er", "--N", 5) == 1
        assert "pe" in capsys.readouterr().err


class TestEstimate:
    def test_full_sampling_mme_is_truth(self, tmp_path):
        out = tmp_path / "e.csv"
        assert run("estimate", "--N", 60, "--pe", 0.1, "--p", 1, "--estimators", "mme",
                   "-o", out) == 0
        rows = read_csv(out)
        assert len(rows) == 60
        assert all(float(r["mme"]) == int(r["true_degree"]) for r in rows)

    def test_urm_minus_mme_column(self, tmp_path):
        out = tmp_path / "e.csv"
        p = 0.3
        run("estimate", "--N", 200, "--pe", 0.05, "--p", p, "--estimators", "mme,urm", "-o", out)
        for r in read_csv(out):
            d = int(r["d_star"])
            gap = float(r["urm"]) - float(r["mme"])
            assert gap == pytest.approx((1 - p) ** 2 / (p * (d + 1 - p)), rel=1e-9, abs=1e-12)

    def test_explicit_prior_file(self, tmp_path):
        pmf = tmp_path / "pmf.csv"
        rows = [f"{d},{w}" for d, w in enumerate(np.full(31, 1 / 31))]
        pmf.write_text("d,probability\n" + "\n".join(rows) + "\n")
        cfg = tmp_path / "run.cfg"
        cfg.write_text("model=er\nN=100\npe=0.1\np=0.5\nestimators=bayes\n"
                       "prior=kind=explicit file=pmf.csv\n")
        out = tmp_path / "e.csv"
        assert run("estimate", "--config", cfg, "-o", out) == 0
        prior = read_pmf_csv(pmf)
        for r in read_csv(out):
            assert float(r["bayes_explicit_pmf"]) == bayes_estimate(int(r["d_star"]), 0.5, prior)

    def test_from_sample_file(self, tmp_path):
        sample = tmp_path / "s.txt"
        assert run("sample", "--N", 50, "--pe", 0.2, "--p", 0.5, "-o", sample) == 0
        out = tmp_path / "e.csv"
        assert run("estimate", "--sample", sample, "--estimators", "mme,mrm", "-o", out) == 0
        head = out.read_text().splitlines()[0]
        assert head == "sampled_index,parent_id,d_star,mme,mrm"

    def test_misconfiguration_reported_before_sampling(self, capsys):
        assert run("estimate", "--N", 50, "--pe", 0.2, "--p", 0.5, "--estimators", "bayes") == 1
        assert "prior" in capsys.readouterr().err
        assert run("estimate", "--N", 50, "--pe", 0.2, "--p", 0.5, "--estimators", "mle") == 1
        assert run("estimate", "--N", 50, "--pe", 0.2, "--p", 0.5, "--estimators", "bayes",
                   "--prior", "kind=poisson") == 1

    def test_numerical_failure_exit_code(self, capsys):
        # a point-mass prior below an observed degree cannot explain the sample
        assert run("estimate", "--N", 30, "--pe", 0.9, "--p", 1, "--estimators", "bayes",
                   "--prior", "kind=powerlaw m=0 dmin=0 dmax=1") == 2
        assert "numerical" in capsys.readouterr().err


class TestRiskAndReproduce:
    def test_risk_csv(self, tmp_path):
        out = tmp_path / "r.csv"
        assert run("risk", "--N", 100, "--pe", 0.1, "--p", 0.3, "--replicates", 4,
                   "--estimators", "mme,urm", "-o", out) == 0
        text = out.read_bytes()
        assert b"\r\n" in text
        rows = read_csv(out)
        assert [r["replicate"] for r in rows] == ["0", "1", "2", "3", "mean"] * 2

    def test_reproduce_small_grid(self, tmp_path):
        out = tmp_path / "t.csv"
        assert run("reproduce", "--table", "er", "--N", 120, "--replicates", 2, "-o", out) == 0
        rows = read_csv(out)
        assert len(rows) == 8 * 6
        for cell in range(8):
            flagged = [r for r in rows if r["cell"] == str(cell) and r["is_min"] == "true"]
            assert len(flagged) >= 1

    def test_config_flags_win(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("model=er\nN=40\npe=0.0\nseed=3\n")
        out = tmp_path / "g.txt"
        assert run("generate", "--config", cfg, "--pe", 1, "-o", out) == 0
        assert load_edge_list(out.read_bytes()).num_edges == 40 * 39 // 2

    def test_bad_config_line(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("model er\n")
        assert run("generate", "--config", cfg) == 1


class TestCheckProps:
    def test_default_report(self, tmp_path, capsys):
        out = tmp_path / "p.csv"
        assert run("check-props", "--props", "1,2,5", "-o", out) == 0
        rows = read_csv(out)
        get = {(r["prop"], r["quantity"]): r for r in rows}
        assert get[("1", "violations")]["value"] == "0"
        assert float(get[("2", "max_feasible_alpha0")]["value"]) == pytest.approx(0, abs=1e-12)
        assert float(get[("5", "interval_lower")]["value"]) == pytest.approx(70.56, abs=0.01)
        assert float(get[("5", "interval_upper")]["value"]) == pytest.approx(140.44, abs=0.01)
        verdicts = [r for r in rows if r["prop"] == "5" and r["quantity"] == "risk_bayes-risk_mme"]
        assert len(verdicts) == 140 - 71 + 1
        text = capsys.readouterr().out
        assert "prop1:" in text and "prop5:" in text

    def test_usage_error_is_config_error(self):
        with pytest.raises(SystemExit) as err:
            run("check-props", "--props")
        assert err.value.code == 1
