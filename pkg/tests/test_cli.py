import json
import math

import numpy as np
import pytest

from lrts.cli import main

NILPOTENT = {
    "manifold": {"matrix": [[0.0, 0.0], [1.0, 0.0]],
                 "domain": {"type": "box", "lower": [0.0], "upper": [10.0]}},
    "diffusion": {"a": [[0.05]],
                  "bump": {"inner": {"lower": [1.0], "upper": [4.0]},
                           "outer": {"lower": [0.5], "upper": [8.0]}}},
    "simulation": {"z0": [2.0], "horizon": 1.0, "n_steps": 50, "n_paths": 8,
                   "seed": 11, "record_maturities": [5.0]},
}

DEMO = {
    "weight": {"alpha": 0.5},
    "manifold": {"matrix": [[-0.1, 0.0], [0.2, -0.5]],
                 "domain": {"type": "box", "lower": [-1.5], "upper": [3.0]}},
    "diffusion": {"a": [[0.05]],
                  "bump": {"inner": {"lower": [-0.5], "upper": [2.0]},
                           "outer": {"lower": [-1.0], "upper": [2.5]}}},
    "simulation": {"z0": [0.3], "horizon": 1.0, "n_steps": 100,
                   "n_paths": 2000, "seed": 42, "record_maturities": [5.0]},
    "verify": {"z_samples": [[-0.4], [0.0], [0.3], [1.0], [1.8]],
               "checks": ["domain_membership", "tangential_columns",
                          "drift_tangency", "martingale"],
               "martingale": {"T": 5.0}},
}

EXP_FAMILY = {
    "manifold": {"c": {"type": "exppoly", "terms": []},
                 "u": [{"type": "exppoly", "terms": [{"coeffs": [1.0], "mu": -1.0}]}],
                 "domain": {"type": "box", "lower": [None], "upper": [0.0]}},
    "price": {"z": [-0.5], "maturities": [1.0, 5.0, 10.0]},
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestManifoldCommand:
    def test_nilpotent_build(self, tmp_path):
        cfg = write_config(tmp_path, NILPOTENT)
        out = tmp_path / "report.json"
        assert main(["manifold", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["ok"] and report["normalized"]

    def test_build_verb_and_report_alias(self, tmp_path):
        cfg = write_config(tmp_path, NILPOTENT)
        out = tmp_path / "alias.json"
        assert main(["manifold", "build", "--config", cfg,
                     "--report", str(out)]) == 0
        assert json.loads(out.read_text())["ok"]

    def test_zero_matrix_exits_two(self, tmp_path):
        payload = {"manifold": {"matrix": [[0.0, 0.0], [0.0, 0.0]],
                                "domain": {"type": "box", "lower": [0.0],
                                           "upper": [1.0]}}}
        cfg = write_config(tmp_path, payload)
        assert main(["manifold", "--config", cfg,
                     "--out", str(tmp_path / "r.json")]) == 2

    def test_malformed_json_exits_one(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["manifold", "--config", str(path)]) == 1

    def test_missing_config_exits_one(self, tmp_path):
        assert main(["manifold", "--config", str(tmp_path / "absent.json")]) == 1


class TestPriceCommand:
    def test_zero_state_prices_are_one(self, tmp_path):
        cfg = write_config(tmp_path, NILPOTENT)
        out = tmp_path / "prices.csv"
        code = main(["price", "--config", cfg, "--z", "1e-13",
                     "--maturities", "1,5,10", "--out", str(out)])
        assert code == 0
        rows = out.read_text().strip().split("\n")
        assert rows[0] == "maturity,price,forward_rate,discount_h"
        for row in rows[1:]:
            vals = [float(v) for v in row.split(",")]
            assert vals[1] == pytest.approx(1.0, abs=1e-11)

    def test_exponential_family_closed_form(self, tmp_path):
        cfg = write_config(tmp_path, EXP_FAMILY)
        out = tmp_path / "prices.csv"
        assert main(["price", "--config", cfg, "--out", str(out)]) == 0
        rows = out.read_text().strip().split("\n")[1:]
        z = -0.5
        for row in rows:
            x, price, fwd, disc = (float(v) for v in row.split(","))
            den = lambda s: 1.0 - z * math.exp(-s)
            assert price == pytest.approx(den(x) / den(0.0), abs=1e-10)
            assert disc == pytest.approx(1.0 - den(x) / den(0.0), abs=1e-10)

    def test_empty_maturities_exit_one(self, tmp_path):
        payload = dict(EXP_FAMILY)
        payload["price"] = {"z": [-0.5], "maturities": []}
        cfg = write_config(tmp_path, payload)
        assert main(["price", "--config", cfg]) == 1

    def test_state_outside_domain_exits_two(self, tmp_path):
        cfg = write_config(tmp_path, EXP_FAMILY)
        assert main(["price", "--config", cfg, "--z", "0.5",
                     "--maturities", "1"]) == 2


class TestSimulateCommand:
    def test_byte_identical_across_thread_counts(self, tmp_path):
        cfg = write_config(tmp_path, DEMO)
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["simulate", "--config", cfg, "--paths", "100",
                     "--steps", "50", "--out", str(out1),
                     "--threads", "1"]) == 0
        assert main(["simulate", "--config", cfg, "--paths", "100",
                     "--steps", "50", "--out", str(out2),
                     "--threads", "8"]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_zero_volatility_zero_variance(self, tmp_path):
        payload = json.loads(json.dumps(DEMO))
        payload["diffusion"]["a"] = [[0.0]]
        payload["output"] = {"paths": str(tmp_path / "p.csv"),
                             "summary": str(tmp_path / "s.json")}
        cfg = write_config(tmp_path, payload)
        assert main(["simulate", "--config", cfg, "--paths", "16"]) == 0
        summary = json.loads((tmp_path / "s.json").read_text())
        assert summary["short_rate"]["stddev"] == 0.0
        bonds = summary["deflated_bonds"]
        assert all(entry["stddev"] == 0.0 for entry in bonds.values())

    def test_seed_override_changes_output(self, tmp_path):
        cfg = write_config(tmp_path, DEMO)
        out1 = tmp_path / "s1.csv"
        out2 = tmp_path / "s2.csv"
        main(["simulate", "--config", cfg, "--paths", "20", "--steps", "20",
              "--seed", "1", "--out", str(out1)])
        main(["simulate", "--config", cfg, "--paths", "20", "--steps", "20",
              "--seed", "2", "--out", str(out2)])
        assert out1.read_bytes() != out2.read_bytes()


class TestVerifyCommand:
    def test_default_suite_passes(self, tmp_path):
        payload = json.loads(json.dumps(DEMO))
        payload["simulation"]["n_paths"] = 4000
        payload["simulation"]["n_steps"] = 250
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "report.json"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["ok"]
        names = {c["name"] for c in report["checks"]}
        assert names == {"domain_membership", "tangential_columns",
                         "drift_tangency", "martingale"}
        for entry in report["checks"]:
            assert entry["verdict"] == "pass"

    def test_drift_fault_injection_exits_three(self, tmp_path):
        payload = json.loads(json.dumps(DEMO))
        payload["simulation"]["n_paths"] = 4000
        payload["simulation"]["n_steps"] = 250
        payload["simulation"]["drift_flip"] = True
        payload["verify"]["checks"] = ["martingale"]
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "report.json"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 3
        report = json.loads(out.read_text())
        assert not report["ok"]
        mart = report["checks"][0]
        assert mart["statistic"] > 10.0

    def test_expected_failure_fixture(self, tmp_path):
        payload = {
            "weight": {"alpha": 1.0},
            "manifold": {"c": {"type": "exppoly", "terms": []},
                         "u": [{"type": "exppoly",
                                "terms": [{"coeffs": [0.0, 0.0, 1.0], "mu": 0.0}]}],
                         "domain": {"type": "box", "lower": [0.0], "upper": [1.0]},
                         "x_max": 1.0},
            "diffusion": {"a": [[1.0]],
                          "bump": {"inner": {"lower": [0.3], "upper": [0.6]},
                                   "outer": {"lower": [0.1], "upper": [0.9]}}},
            "verify": {"x_max": 10.0,
                       "z_samples": [[0.2], [0.5], [0.8]],
                       "checks": ["domain_membership", "tangential_columns",
                                  "drift_tangency"],
                       "expect": {"drift_tangency": "fail",
                                  "domain_membership": "fail"}},
        }
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "report.json"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        verdicts = {c["name"]: c["verdict"] for c in report["checks"]}
        assert verdicts["drift_tangency"] == "expected_failure"

    def test_unknown_check_exits_one(self, tmp_path):
        payload = json.loads(json.dumps(DEMO))
        payload["verify"]["checks"] = ["no_such_check"]
        cfg = write_config(tmp_path, payload)
        assert main(["verify", "--config", cfg]) == 1


class TestFitCommand:
    def test_fit_roundtrip(self, tmp_path):
        payload = json.loads(json.dumps(DEMO))
        cfg = write_config(tmp_path, payload)
        import lrts
        m = lrts.manifold_from_json(payload["manifold"])
        h = m.chart_h([0.4])
        obs = tmp_path / "obs.csv"
        lines = ["maturity,price"]
        for x in (1.0, 2.0, 5.0, 10.0):
            lines.append(f"{x},{1.0 - float(h.value(x))!r}")
        obs.write_text("\n".join(lines) + "\n")
        out = tmp_path / "fit.json"
        assert main(["fit", "--config", cfg, "--observations", str(obs),
                     "--out", str(out)]) == 0
        result = json.loads(out.read_text())
        assert result["z"][0] == pytest.approx(0.4, abs=1e-9)
        assert result["residual"] <= 1e-10
        assert result["in_domain"]

    def test_rank_deficient_exits_two(self, tmp_path):
        cfg = write_config(tmp_path, DEMO)
        obs = tmp_path / "obs.csv"
        obs.write_text("maturity,price\n0.0,1.0\n")
        assert main(["fit", "--config", cfg, "--observations", str(obs)]) == 2

    def test_bad_header_exits_one(self, tmp_path):
        cfg = write_config(tmp_path, DEMO)
        obs = tmp_path / "obs.csv"
        obs.write_text("tenor,quote\n1.0,0.99\n")
        assert main(["fit", "--config", cfg, "--observations", str(obs)]) == 1


class TestUsage:
    def test_missing_subcommand_exits_one(self):
        assert main([]) == 1

    def test_missing_config_flag_exits_one(self):
        assert main(["price"]) == 1
