import json
import subprocess
import sys

import numpy as np
import pytest

from stochpert.cli import main


@pytest.fixture
def model_config(tmp_path):
    def write(doc, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return write


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


PATH2 = {"graph": {"nodes": 2, "edges": [[0, 1]]}, "alpha": 0.0,
         "epsilon": 0.1, "beta_override": None}
PATH3 = {"graph": {"nodes": 3, "edges": [[0, 1], [1, 2]]}, "alpha": 0.0,
         "epsilon": 0.1, "beta_override": None}
SINGLE = {"graph": {"nodes": 1, "edges": []}, "alpha": 0.0, "epsilon": 0.1,
          "beta_override": None}


class TestSpectrum:
    @pytest.mark.parametrize("doc,expect", [
        (SINGLE, {1.0: 2, 0.0: 1}),
        (PATH2, {1.0: 4, 0.0: 5}),
        (PATH3, {1.0: 8, 0.0: 19}),
    ])
    def test_zero_eps_clusters(self, capsys, model_config, doc, expect):
        code, rep = run_json(capsys, ["spectrum", "--config",
                                      model_config(doc), "--eps", "0"])
        assert code == 0
        clusters = {round(c["center_re"], 6): c["count"]
                    for c in rep["result"]["clusters"]}
        assert clusters == expect
        assert rep["result"]["gap"] == pytest.approx(1.0, abs=1e-9)


class TestErgodicity:
    def test_contraction_regime(self, capsys, model_config):
        code, rep = run_json(capsys, ["ergodicity", "--config",
                                      model_config(PATH3)])
        assert code == 0
        assert rep["result"]["geometrically_ergodic"] is True
        assert rep["result"]["linf_norm"] <= 0.9 + 1e-12

    def test_zero_eps_certificate_false(self, capsys, model_config):
        code, rep = run_json(capsys, ["ergodicity", "--config",
                                      model_config(PATH3), "--eps", "0"])
        assert code == 0
        assert rep["result"]["geometrically_ergodic"] is False
        assert rep["result"]["linf_norm"] == pytest.approx(1.0, abs=1e-12)

    def test_supercritical_alpha(self, capsys, model_config):
        doc = dict(PATH3, alpha=0.6, epsilon=0.3)
        code, rep = run_json(capsys, ["ergodicity", "--config",
                                      model_config(doc)])
        assert code == 0
        assert rep["result"]["closed_form_bound"] >= 1.0
        assert rep["result"]["linf_norm"] == pytest.approx(
            1 - 0.3 + 2 * 0.6 * 0.3, abs=1e-12)


class TestSepAndSylvester:
    def test_sep_scalar(self, capsys, model_config):
        cfg = model_config({"A": [[2.0]], "B": [[1.0]]}, "sep.json")
        code, rep = run_json(capsys, ["sep", "--config", cfg])
        assert code == 0
        assert rep["result"]["sep"] == pytest.approx(1.0)
        assert rep["result"]["norm"] == "frobenius"

    def test_sylvester_scalar(self, capsys, model_config):
        cfg = model_config({"A": [[2.0]], "B": [[1.0]], "C": [[3.0]]},
                           "syl.json")
        code, rep = run_json(capsys, ["sylvester", "--config", cfg])
        assert code == 0
        assert rep["result"]["X"] == [[3.0]]

    def test_shared_eigenvalue_is_domain_error(self, capsys, model_config):
        cfg = model_config({"A": [[1.0]], "B": [[1.0]], "C": [[1.0]]},
                           "syl.json")
        assert main(["sylvester", "--config", cfg]) == 1
        assert "eigenvalue" in capsys.readouterr().err

    def test_slow_series_is_numerical_failure(self, capsys, model_config):
        cfg = model_config({"A": [[0.9999]], "B": [[1.0001]], "C": [[1.0]],
                            "method": "series"}, "syl.json")
        assert main(["sylvester", "--config", cfg]) == 2
        assert "numerical" in capsys.readouterr().err


class TestDobrushinCommand:
    def test_point_mass_measure(self, capsys, model_config):
        doc = dict(PATH2, measure={"point_masses": [[0, 0], [2, 0]]})
        code, rep = run_json(capsys, ["dobrushin", "--config",
                                      model_config(doc)])
        assert code == 0
        assert rep["result"]["z_norm_primal"] == pytest.approx(1.0, abs=1e-9)
        assert rep["result"]["z_norm_dual"] == pytest.approx(1.0, abs=1e-9)

    def test_tangent_norm_default(self, capsys, model_config):
        code, rep = run_json(capsys, ["dobrushin", "--config",
                                      model_config(SINGLE)])
        assert code == 0
        assert rep["result"]["tangent_norm"] > 0


class TestEffectiveAndContinue:
    def test_effective_matrix(self, capsys, model_config):
        code, rep = run_json(capsys, ["effective", "--config",
                                      model_config(SINGLE), "--eps", "0.1",
                                      "--order", "2"])
        assert code == 0
        m = np.array(rep["result"]["matrix"])
        assert np.abs(m - [[0.95, 0.05], [0.05, 0.95]]).max() < 1e-10

    def test_effective_sweep_writes_csv(self, capsys, model_config, tmp_path):
        out = tmp_path / "sweep.json"
        code = main(["effective", "--config", model_config(SINGLE),
                     "--eps", "0.02,0.04", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert len(rep["result"]["sweep"]) == 2
        csv_text = (tmp_path / "sweep.csv").read_text().splitlines()
        assert csv_text[0].startswith("eps,order1_error,order2_error")
        assert len(csv_text) == 3

    def test_continue_report_and_csv(self, capsys, model_config, tmp_path):
        out = tmp_path / "cont.json"
        code = main(["continue", "--config", model_config(PATH2),
                     "--eps", "0.05", "--steps", "4", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["result"]["rank"] == 4
        assert len(rep["result"]["path"]) == 5
        assert (tmp_path / "cont.csv").exists()


class TestErrorsAndReproducibility:
    def test_malformed_json_is_config_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        assert main(["spectrum", "--config", str(bad)]) == 3
        assert "line 1" in capsys.readouterr().err

    def test_missing_field_is_config_error(self, capsys, model_config):
        cfg = model_config({"alpha": 0.1}, "missing.json")
        assert main(["spectrum", "--config", cfg]) == 3
        err = capsys.readouterr().err
        assert "graph" in err

    def test_unknown_subcommand_is_config_error(self, capsys):
        assert main(["frobnicate"]) == 3

    def test_missing_config_is_config_error(self, capsys):
        assert main(["spectrum"]) == 3

    def test_reports_identical_modulo_duration(self, capsys, model_config,
                                               tmp_path):
        cfg = model_config(PATH2)
        outs = []
        for name in ("a.json", "b.json"):
            path = tmp_path / name
            assert main(["ergodicity", "--config", cfg, "--out",
                         str(path)]) == 0
            doc = json.loads(path.read_text())
            doc["meta"]["duration_s"] = None
            outs.append(json.dumps(doc, sort_keys=True))
        capsys.readouterr()
        assert outs[0] == outs[1]

    def test_report_embeds_metadata(self, capsys, model_config):
        code, rep = run_json(capsys, ["ergodicity", "--config",
                                      model_config(PATH2)])
        meta = rep["meta"]
        assert meta["config"]["alpha"] == 0.0
        assert meta["version"]
        assert "seed" in meta and "duration_s" in meta


class TestVerifyCommand:
    def test_verify_passes(self, capsys, tmp_path):
        out = tmp_path / "verify.json"
        code = main(["verify", "--out", str(out)])
        stdout = capsys.readouterr().out
        assert code == 0
        assert "10/10 criteria passed" in stdout
        rep = json.loads(out.read_text())
        assert rep["result"]["all_passed"] is True


def test_console_script_entry_point(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps(SINGLE))
    proc = subprocess.run(
        [sys.executable, "-m", "stochpert.cli", "spectrum", "--config",
         str(cfg), "--eps", "0"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    rep = json.loads(proc.stdout)
    assert rep["command"] == "spectrum"
