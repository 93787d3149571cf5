import argparse
import json

import numpy as np
import pandas as pd
import pytest

import core
import launcher
from commands import load_vector, parse_k
from commands.fit import resolve_mode
from commands.simulate import parse_estimators
from core.enums import Estimator, FitMode
from core.errors import DimensionMismatchError, ValidationError
from storage import save_csv


@pytest.fixture
def data_files(tmp_path, sim_data):
    x_path, y_path = tmp_path / "x.csv", tmp_path / "y.csv"
    save_csv(x_path, sim_data.x)
    save_csv(y_path, sim_data.y)
    return x_path, y_path


def run_fit(data_files, out, *extra):
    x_path, y_path = data_files
    return launcher.main(["fit", "--x", str(x_path), "--y", str(y_path), "--out", str(out), "--seed", "3", *extra])


class TestArguments:
    def test_parse_k(self):
        assert parse_k("auto") is None
        assert parse_k(" AUTO ") is None
        assert parse_k("3") == 3

        for bad in ("-1", "three"):
            with pytest.raises(argparse.ArgumentTypeError):
                parse_k(bad)

    @pytest.mark.parametrize(
        ("k", "projector", "mode"),
        [
            (None, False, FitMode.data_driven),
            (2, False, FitMode.oracle_k),
            (None, True, FitMode.oracle_p),
            (0, True, FitMode.oracle_p),
        ],
    )
    def test_resolve_mode(self, k, projector, mode):
        assert resolve_mode(k, projector) is mode

    def test_resolve_mode_conflicts(self):
        with pytest.raises(ValidationError, match="requires --projector"):
            resolve_mode(0, False)

        with pytest.raises(ValidationError, match="mutually exclusive"):
            resolve_mode(2, True)

    def test_basis_vector(self):
        assert load_vector("e2", 3, "u").tolist() == [0.0, 1.0, 0.0]

        with pytest.raises(DimensionMismatchError):
            load_vector("e4", 3, "u")

    def test_vector_file(self, tmp_path):
        save_csv(tmp_path / "v.csv", np.array([[0.5], [0.5], [0.0]]))

        assert load_vector(str(tmp_path / "v.csv"), 3, "v").tolist() == [0.5, 0.5, 0.0]
        with pytest.raises(DimensionMismatchError):
            load_vector(str(tmp_path / "v.csv"), 4, "v")

    def test_vector_must_exist(self, tmp_path):
        with pytest.raises(ValidationError):
            load_vector(str(tmp_path / "absent.csv"), 3, "v")

    def test_parse_estimators(self):
        assert parse_estimators("naive_mle, oracle_k") == (Estimator.naive_mle, Estimator.oracle_k)

        with pytest.raises(argparse.ArgumentTypeError):
            parse_estimators("lasso")

    def test_every_command_is_registered(self):
        parser = launcher.build_parser()
        choices = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices

        assert set(choices) == {"fit", "infer", "simulate", "reproduce", "fstar-oracle"}

    def test_missing_command(self):
        with pytest.raises(SystemExit) as info:
            launcher.main([])

        assert info.value.code == 2


class TestFit:
    def test_writes_fit(self, tmp_path, data_files):
        assert run_fit(data_files, tmp_path / "fit.json") == 0

        payload = json.loads((tmp_path / "fit.json").read_text())
        assert (payload["theta_hat"]["rows"], payload["theta_hat"]["cols"]) == (4, 4)
        assert payload["mode"] == "data_driven"
        assert payload["split"]["seed"] == 3

    def test_is_reproducible(self, tmp_path, data_files):
        run_fit(data_files, tmp_path / "a.json")
        run_fit(data_files, tmp_path / "b.json")

        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_oracle_k(self, tmp_path, data_files):
        assert run_fit(data_files, tmp_path / "fit.json", "--k", "2") == 0
        assert json.loads((tmp_path / "fit.json").read_text())["spectral"]["k_hat"] == 2

    def test_zero_k_needs_projector(self, tmp_path, data_files, capsys):
        assert run_fit(data_files, tmp_path / "fit.json", "--k", "0") == 2

        err = capsys.readouterr().err.strip().splitlines()
        assert err[-1] == "ghive fit: error: --k 0 requires --projector."
        assert not (tmp_path / "fit.json").exists()

    def test_invalid_response(self, tmp_path, data_files, capsys):
        x_path, _ = data_files
        y_path = tmp_path / "bad_y.csv"
        y_path.write_text("1\n" * 199 + "2\n")

        assert run_fit((x_path, y_path), tmp_path / "fit.json") == 2
        assert "row 200" in capsys.readouterr().err


class TestInfer:
    def run_infer(self, tmp_path, data_files, fit_path, *extra):
        x_path, y_path = data_files
        args = ["infer", "--fit", str(fit_path), "--x", str(x_path), "--y", str(y_path), "--out", str(tmp_path / "ci.json")]
        return launcher.main([*args, *extra])

    def test_identity_projector(self, tmp_path, data_files):
        save_csv(tmp_path / "eye.csv", np.eye(4))
        run_fit(data_files, tmp_path / "fit.json", "--projector", str(tmp_path / "eye.csv"))

        assert self.run_infer(tmp_path, data_files, tmp_path / "fit.json", "--u", "e1", "--v", "e1") == 0

        fit = json.loads((tmp_path / "fit.json").read_text())
        result = json.loads((tmp_path / "ci.json").read_text())
        assert result["estimate"] == fit["theta_hat"]["data"][0]
        assert result["estimate"] == fit["f_hat"]["data"][0]
        assert result["ci_hi"] - result["estimate"] == pytest.approx(1.959964 * result["se"], abs=1e-5)
        assert result["se_scale"] == "asymptotic"

    def test_sample_scale_and_alpha(self, tmp_path, data_files):
        run_fit(data_files, tmp_path / "fit.json")
        extra = ("--u", "e2", "--v", "e3", "--alpha", "0.1", "--se-scale", "sample")
        assert self.run_infer(tmp_path, data_files, tmp_path / "fit.json", *extra) == 0

        result = json.loads((tmp_path / "ci.json").read_text())
        assert result["alpha"] == 0.1
        assert result["se_scale"] == "sample"

    def test_configured_eps_floor_reaches_inference(self, tmp_path, data_files, monkeypatch):
        run_fit(data_files, tmp_path / "fit.json")
        monkeypatch.setitem(core.config["SOLVER"], "eps_floor", 1e-3)

        seen = []
        original = core.confidence_interval

        def recording(fit, data, family, *args, **kwargs):
            seen.append(family.eps_floor)
            return original(fit, data, family, *args, **kwargs)

        monkeypatch.setattr(core, "confidence_interval", recording)

        assert self.run_infer(tmp_path, data_files, tmp_path / "fit.json", "--u", "e1", "--v", "e1") == 0
        assert seen == [1e-3]

    def test_missing_fit(self, tmp_path, data_files, capsys):
        missing = tmp_path / "nowhere.json"

        assert self.run_infer(tmp_path, data_files, missing, "--u", "e1", "--v", "e1") == 2
        assert str(missing) in capsys.readouterr().err
        assert not (tmp_path / "ci.json").exists()

    def test_contrast_dimension_mismatch(self, tmp_path, data_files):
        run_fit(data_files, tmp_path / "fit.json")

        assert self.run_infer(tmp_path, data_files, tmp_path / "fit.json", "--u", "e5", "--v", "e1") == 2

    def test_data_dimension_mismatch(self, tmp_path, data_files, sim_data):
        run_fit(data_files, tmp_path / "fit.json")
        save_csv(tmp_path / "x3.csv", sim_data.x[:, :3])

        x3 = (tmp_path / "x3.csv", data_files[1])
        assert self.run_infer(tmp_path, x3, tmp_path / "fit.json", "--u", "e1", "--v", "e1") == 2


class TestSimulations:
    def test_simulate(self, tmp_path):
        config = {"n": 60, "p": 3, "m_dim": 3, "k": 1, "eta": 1.0, "reps": 1, "seed": 5}
        (tmp_path / "sim.json").write_text(json.dumps(config))

        code = launcher.main(
            [
                "simulate",
                "--config",
                str(tmp_path / "sim.json"),
                "--estimators",
                "naive_mle,oracle_k",
                "--reps",
                "2",
                "--out",
                str(tmp_path / "out"),
            ]
        )
        long = pd.read_csv(tmp_path / "out" / "long.csv")

        assert code == 0
        assert set(long["estimator"]) == {"naive_mle", "oracle_k"}
        assert sorted(long["rep"].unique()) == [0, 1]
        assert (tmp_path / "out" / "aggregated.csv").is_file()

    def test_simulate_rejects_bad_config(self, tmp_path):
        (tmp_path / "sim.json").write_text(json.dumps({"n": 60, "p": 3}))

        assert launcher.main(["simulate", "--config", str(tmp_path / "sim.json"), "--out", str(tmp_path / "out")]) == 2

    def test_reproduce(self, tmp_path):
        code = launcher.main(["reproduce", "table1", "--reps", "1", "--n-mc", "10000", "--out", str(tmp_path / "t1")])
        aggregated = pd.read_csv(tmp_path / "t1" / "aggregated.csv")

        assert code == 0
        assert set(aggregated["estimator"]) == {"data_driven", "naive_mle"}
        assert "cover_pf" in set(aggregated["metric"])

    def test_fstar_oracle(self, tmp_path):
        config = {"n": 10, "p": 3, "m_dim": 3, "k": 3, "eta": 10.0}
        (tmp_path / "sim.json").write_text(json.dumps(config))

        args = ["fstar-oracle", "--config", str(tmp_path / "sim.json"), "--out", str(tmp_path / "f.json")]
        code = launcher.main([*args, "--n-mc", "10000"])
        payload = json.loads((tmp_path / "f.json").read_text())

        assert code == 0
        assert payload["n_mc"] == 10_000
        assert payload["config"]["sigma_z_decay"] == 0.5
        assert payload["bias2"] < payload["bias1"]

    def test_fstar_oracle_sample_floor(self, tmp_path):
        (tmp_path / "sim.json").write_text(json.dumps({"n": 10, "p": 3, "m_dim": 3, "k": 3, "eta": 1.0}))

        args = ["fstar-oracle", "--config", str(tmp_path / "sim.json"), "--out", str(tmp_path / "f.json")]
        assert launcher.main([*args, "--n-mc", "100"]) == 2
