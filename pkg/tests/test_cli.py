import csv

import numpy as np
import pytest

from qgplab import cli, metrics
from qgplab.models import RobustModelParams, RotatingSpinParams

ROTATING_CONFIG = """
[model]
name = rotating_spin
eta = {eta}
xi = {xi}
k = {k}

[run]
tau_start = 0.0
tau_end = {tau_end}
samples = {samples}
level = upper
tol = 1e-9

[conditions]
delta = 0.1

[output]
dir = {out}
outputs = trajectory,fidelity,conditions
"""

CONSTANT_CONFIG = """
[model]
name = fourier
dim = 2
term1 = {{"matrix": "sigma_z", "omega": 0.0, "amplitude": 1.0}}

[run]
tau_end = 3.0
samples = 256
level = lower

[output]
dir = {out}
"""


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])
    return header, rows


def rotating_config(tmp_path, params: RotatingSpinParams, out="out", samples=2048, periods=2.0):
    tau_end = periods * metrics.rotating_fidelity_period(params)
    text = ROTATING_CONFIG.format(
        eta=params.eta, xi=params.xi, k=params.K, tau_end=tau_end,
        samples=samples, out=tmp_path / out,
    )
    path = tmp_path / "scenario.ini"
    path.write_text(text)
    return path


class TestSimulate:
    def test_fidelity_columns_agree(self, tmp_path):
        params = RotatingSpinParams(eta=1.0, xi=0.5, K=2.0)
        config = rotating_config(tmp_path, params)
        assert cli.main(["simulate", "--config", str(config)]) == 0
        header, rows = read_csv(tmp_path / "out" / "fidelity.csv")
        assert header == ["tau", "F_simulated", "F_closed_form"]
        assert np.max(np.abs(rows[:, 1] - rows[:, 2])) < 1e-6

    def test_trajectory_norms(self, tmp_path):
        params = RotatingSpinParams(eta=1.0, xi=0.5, K=2.0)
        config = rotating_config(tmp_path, params)
        assert cli.main(["simulate", "--config", str(config)]) == 0
        header, rows = read_csv(tmp_path / "out" / "trajectory.csv")
        assert header == ["tau", "re_a0", "im_a0", "re_a1", "im_a1", "norm"]
        np.testing.assert_allclose(rows[:, -1], 1.0, atol=1e-9)

    def test_constant_model_fidelity_is_one(self, tmp_path):
        path = tmp_path / "const.ini"
        path.write_text(CONSTANT_CONFIG.format(out=tmp_path / "out"))
        assert cli.main(["simulate", "--config", str(path)]) == 0
        header, rows = read_csv(tmp_path / "out" / "fidelity.csv")
        assert header == ["tau", "F_simulated"]
        np.testing.assert_allclose(rows[:, 1], 1.0, atol=1e-9)

    def test_missing_field_exits_2(self, tmp_path, capsys):
        path = tmp_path / "broken.ini"
        path.write_text("[model]\nname = rotating_spin\nxi = 0.5\nk = 1.0\n")
        assert cli.main(["simulate", "--config", str(path)]) == 2
        assert "eta" in capsys.readouterr().err

    def test_bad_grid_exits_2(self, tmp_path):
        params = RotatingSpinParams(eta=1.0, xi=0.5, K=2.0)
        config = rotating_config(tmp_path, params)
        assert cli.main(["simulate", "--config", str(config), "--grid", "8"]) == 2

    def test_numerical_failure_exits_3(self, tmp_path, capsys):
        # B < 0 closes the gap at sampling time: a numerical error, not a
        # config one
        path = tmp_path / "closed.ini"
        path.write_text(
            "[model]\nname = bloch_curve\ntheta_type = const\ntheta_coeffs = 1.0\n"
            "phi_type = poly\nphi_coeffs = 0.0,1.0\nb = -1.0\n"
            f"[run]\ntau_end = 1.0\nsamples = 128\n[output]\ndir = {tmp_path / 'out'}\n"
        )
        assert cli.main(["simulate", "--config", str(path)]) == 3
        assert "gap" in capsys.readouterr().err.lower()

    def test_byte_identical_reruns(self, tmp_path):
        params = RotatingSpinParams(eta=1.0, xi=0.5, K=2.0)
        config = rotating_config(tmp_path, params, samples=512)
        assert cli.main(["simulate", "--config", str(config)]) == 0
        first = (tmp_path / "out" / "trajectory.csv").read_bytes()
        assert cli.main(["simulate", "--config", str(config)]) == 0
        assert (tmp_path / "out" / "trajectory.csv").read_bytes() == first


class TestConditions:
    def test_unfaithful_regime_summary(self, tmp_path, regime_unfaithful, capsys):
        config = rotating_config(tmp_path, regime_unfaithful)
        assert cli.main(["conditions", "--config", str(config)]) == 0
        text = (tmp_path / "out" / "summary.txt").read_text()
        assert "traditional: " in text and "-> PASS" in text.splitlines()[2]
        assert "-> FAIL" in text.splitlines()[3]
        # adiabaticity indeed breaks: observed fidelity dips to ~sin(theta)
        observed = [ln for ln in text.splitlines() if "observed min fidelity" in ln][0]
        assert float(observed.split(":")[1]) < 0.2

    def test_rescued_regime_summary(self, tmp_path, regime_rescued):
        config = rotating_config(tmp_path, regime_rescued)
        assert cli.main(["conditions", "--config", str(config)]) == 0
        text = (tmp_path / "out" / "summary.txt").read_text()
        assert "-> FAIL" in text.splitlines()[2]
        assert "-> PASS" in text.splitlines()[3]
        observed = [ln for ln in text.splitlines() if "observed min fidelity" in ln][0]
        assert float(observed.split(":")[1]) > 0.99

    def test_csv_columns(self, tmp_path, regime_unfaithful):
        config = rotating_config(tmp_path, regime_unfaithful)
        assert cli.main(["conditions", "--config", str(config)]) == 0
        header, rows = read_csv(tmp_path / "out" / "conditions.csv")
        assert header == ["tau", "gap", "|gamma|", "delta_qgp", "traditional_ratio", "new_ratio"]
        p = regime_unfaithful
        np.testing.assert_allclose(rows[:, 3], p.qgp, atol=1e-6)
        np.testing.assert_allclose(rows[:, 2], p.coupling_abs, atol=1e-8)

    def test_constant_model_both_pass(self, tmp_path):
        path = tmp_path / "const.ini"
        path.write_text(CONSTANT_CONFIG.format(out=tmp_path / "out"))
        assert cli.main(["conditions", "--config", str(path)]) == 0
        text = (tmp_path / "out" / "summary.txt").read_text()
        assert text.count("-> PASS") == 2

    def test_three_level_emits_per_pair_files(self, tmp_path):
        config = f"""
[model]
name = fourier
dim = 3
term1 = {{"matrix": [[0,0,0],[0,2,0],[0,0,5]], "omega": 0.0, "amplitude": 1.0}}
term2 = {{"matrix": [[0,0.3,0.1],[0.3,0,0.2],[0.1,0.2,0]], "omega": 1.7, "amplitude": 1.0}}
term3 = {{"matrix": [[0,[0,-0.3],[0,-0.1]],[[0,0.3],0,[0,-0.2]],[[0,0.1],[0,0.2],0]], "omega": 1.7, "amplitude": 1.0, "phase": -1.5707963267948966}}

[run]
tau_end = 4.0
samples = 1024
level = 1

[output]
dir = {tmp_path / "out3"}
outputs = conditions
"""
        path = tmp_path / "three.ini"
        path.write_text(config)
        assert cli.main(["conditions", "--config", str(path)]) == 0
        assert (tmp_path / "out3" / "conditions_m1_n0.csv").exists()
        assert (tmp_path / "out3" / "conditions_m1_n2.csv").exists()
        header, _ = read_csv(tmp_path / "out3" / "conditions_m1_n0.csv")
        assert header == ["tau", "gap", "|gamma|", "delta_qgp", "traditional_ratio", "new_ratio"]


@pytest.fixture(scope="module")
def figure1_outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig1")
    code = cli.main(["figure1", "--out", str(out), "--grid", "4096", "--tol", "1e-6"])
    return code, out


class TestFigure1:
    @pytest.fixture
    def outputs(self, figure1_outputs):
        return figure1_outputs

    def test_exit_code(self, outputs):
        assert outputs[0] == 0

    def test_bloch_vectors_unit_norm(self, outputs):
        _, out = outputs
        header, rows = read_csv(out / "bloch.csv")
        assert header == ["tau", "evo_x", "evo_y", "evo_z", "adia_x", "adia_y", "adia_z"]
        for base in (1, 4):
            norms = np.linalg.norm(rows[:, base : base + 3], axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-9)

    def test_min_probability_floor(self, outputs):
        _, out = outputs
        _, rows = read_csv(out / "P.csv")
        floor = metrics.p_min(RobustModelParams(eta=1.0, eta0=20.0, eta1=1.0, eta2=100.0))
        assert float(np.min(rows[:, 1])) >= floor - 1e-6
        assert np.max(np.abs(rows[:, 1] - rows[:, 2])) < 1e-6

    def test_adiabatic_oscillation_frequency(self, outputs):
        _, out = outputs
        _, rows = read_csv(out / "bloch.csv")
        tau, z_adia = rows[:, 0], rows[:, 6]
        spectrum = np.abs(np.fft.rfft(z_adia - z_adia.mean()))
        peak = int(np.argmax(spectrum))
        omega_peak = 2.0 * np.pi * peak / (tau[-1] - tau[0])
        assert abs(omega_peak - 200.0) <= 0.05 * 200.0

    def test_svg_written(self, outputs):
        _, out = outputs
        svg = (out / "figure1.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<polyline") == 2


class TestSweep:
    def test_single_point_matches_conditions(self, tmp_path, regime_unfaithful):
        config_text = ROTATING_CONFIG.format(
            eta=regime_unfaithful.eta, xi=regime_unfaithful.xi, k=regime_unfaithful.K,
            tau_end=2.0 * metrics.rotating_fidelity_period(regime_unfaithful),
            samples=1024, out=tmp_path / "out",
        ) + "\n[sweep]\nk = 1.0\n"
        path = tmp_path / "sweep1.ini"
        path.write_text(config_text)
        assert cli.main(["sweep", "--config", str(path)]) == 0
        header, rows = read_csv(tmp_path / "out" / "summary.csv")
        assert header == ["k", "traditional_ratio", "traditional_pass", "new_ratio",
                          "new_pass", "min_fidelity"]
        assert rows.shape[0] == 1
        assert rows[0, 2] == 1.0 and rows[0, 4] == 0.0

    def test_k_sweep_reproduces_verdict_flip(self, tmp_path):
        # periods differ wildly across K; pick a fixed short window instead
        config_text = ROTATING_CONFIG.format(
            eta=1.0, xi=0.05, k=1.0, tau_end=0.05, samples=512, out=tmp_path / "out",
        ) + "\n[sweep]\nk = 0.5,1.0,2.0,50.0,200.0\n"
        path = tmp_path / "sweepk.ini"
        path.write_text(config_text)
        assert cli.main(["sweep", "--config", str(path)]) == 0
        header, rows = read_csv(tmp_path / "out" / "summary.csv")
        verdicts = {row[0]: (row[2], row[4]) for row in rows}
        assert verdicts[0.5] == (1.0, 1.0)  # well off resonance: both hold
        assert verdicts[1.0] == (1.0, 0.0)  # resonance: gap test blind, QGP test fails
        assert verdicts[50.0] == (0.0, 1.0)  # fast: gap test fails, QGP rescues
        assert verdicts[200.0] == (0.0, 1.0)

    def test_empty_range_exits_2(self, tmp_path, regime_unfaithful):
        config_text = ROTATING_CONFIG.format(
            eta=1.0, xi=0.5, k=1.0, tau_end=1.0, samples=256, out=tmp_path / "out",
        ) + "\n[sweep]\nk =\n"
        path = tmp_path / "bad.ini"
        path.write_text(config_text)
        assert cli.main(["sweep", "--config", str(path)]) == 2

    def test_budget_exceeded_exits_2(self, tmp_path):
        values = ",".join(str(v) for v in range(25))
        config_text = ROTATING_CONFIG.format(
            eta=1.0, xi=0.5, k=1.0, tau_end=1.0, samples=256, out=tmp_path / "out",
        ) + f"\n[sweep]\nk = {values}\neta = {values}\nxi = {values}\n"
        path = tmp_path / "big.ini"
        path.write_text(config_text)
        assert cli.main(["sweep", "--config", str(path)]) == 2
