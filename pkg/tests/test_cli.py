import csv
import json
import math
import os
import subprocess
import sys

import pytest

from thermoq import cli
from thermoq.sweep.output import RunManifest, sha256_file

COMMANDS = ["qfi-coherence", "qfi-phase", "qfi-qubit", "coupler-map", "coupler-validate", "visibility", "compare"]


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def run(tmp_path, *argv, name="out.csv", text=None):
    if text is not None:
        cfg = tmp_path / "c.ini"
        cfg.write_text(text, encoding="utf-8")
        argv = (*argv, "--config", str(cfg))
    out = tmp_path / name
    code = cli.run([*argv, "-q", "--out", str(out)])
    return code, out


@pytest.mark.parametrize("command", COMMANDS)
def test_bundled_configs_run(tmp_path, command):
    code, out = run(tmp_path, command)
    assert code == 0
    header, rows = read(out)
    assert rows
    manifest = RunManifest.load(str(tmp_path / "out.manifest.json"))
    assert manifest.command == command
    assert manifest.exit_code == 0
    assert manifest.outputs["out.csv"] == sha256_file(str(out))


def test_seventeen_digit_format(tmp_path):
    _, out = run(tmp_path, "qfi-phase")
    with open(out) as fh:
        fh.readline()
        first = fh.readline().strip().split(",")
    for field in first:
        mantissa = field.split("e")[0].lstrip("-")
        assert len(mantissa.replace(".", "")) == 17


@pytest.mark.parametrize("command", ["qfi-coherence", "qfi-qubit", "coupler-map", "visibility"])
def test_worker_count_byte_identical(tmp_path, command):
    _, a = run(tmp_path, command, "--workers", "1", name="a.csv")
    _, b = run(tmp_path, command, "--workers", "4", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_env_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("THERMOQ_WORKERS", "3")
    assert cli.build_parser().parse_args(["compare"]).workers == 3
    monkeypatch.setenv("THERMOQ_WORKERS", "lots")
    assert cli.build_parser().parse_args(["compare"]).workers == 1


def test_manifest_rerun_identical(tmp_path):
    code, out = run(tmp_path, "qfi-coherence", name="first.csv")
    assert code == 0
    first = RunManifest.load(str(tmp_path / "first.manifest.json"))
    code, out2 = run(tmp_path, "qfi-coherence", "--manifest", str(tmp_path / "first.manifest.json"), name="second.csv")
    assert code == 0
    assert sha256_file(str(out2)) == first.outputs["first.csv"]
    second = RunManifest.load(str(tmp_path / "second.manifest.json"))
    assert second.config_text == first.config_text
    assert second.master_seed == first.master_seed


def test_manifest_for_other_command(tmp_path):
    run(tmp_path, "compare", name="first.csv")
    code, _ = run(tmp_path, "qfi-phase", "--manifest", str(tmp_path / "first.manifest.json"))
    assert code == 1


COHERENCE_POINT = """\
[run]
command = qfi-coherence
[fixed]
f_a = 1e9 Hz
lambda = 5e4 Hz
alpha = 2 dimensionless
nu = 10000 dimensionless
[axis.T]
unit = K
values = 0.01
[axis.tau]
unit = s
values = 1e-5
"""


def test_single_point_grid(tmp_path):
    code, out = run(tmp_path, "qfi-coherence", text=COHERENCE_POINT)
    assert code == 0
    header, rows = read(out)
    assert header == ["T_K", "tau_s", "qfi_per_K2", "C", "deltaT_K"]
    assert len(rows) == 1
    assert rows[0][2] == pytest.approx(34483, rel=1e-4)


def test_coherence_optimum_near_sensing_point(tmp_path):
    _, _ = run(tmp_path, "qfi-coherence")
    header, rows = read(tmp_path / "out_opt.csv")
    assert header == ["T_K", "tau_opt_s", "deltaT_min_K", "at_boundary"]
    T, tau_opt, dT = min(rows, key=lambda r: abs(math.log(r[0] / 0.01)))[:3]
    assert T == pytest.approx(0.01, rel=0.15)
    assert 40e-6 <= dT <= 80e-6
    assert 5e-6 <= tau_opt <= 20e-6


def test_phase_tau_squared_and_saturation(tmp_path):
    code, out = run(tmp_path, "qfi-phase")
    assert code == 0
    header, rows = read(out)
    assert header == ["T_K", "tau_s", "qfi_per_K2", "deltaT_K"]
    by_T = {}
    for T, tau, F, _ in rows:
        by_T.setdefault(T, {})[tau] = F
    for F in by_T.values():
        if F[1e-5] > 0:
            assert F[1e-4] / F[1e-5] == pytest.approx(100, rel=1e-12)
    hot = by_T[max(by_T)]
    hbar, k_B = 1.054571817e-34, 1.380649e-23
    sat = (2 * math.pi * 5e4 * 1e-5 * k_B / (hbar * 2 * math.pi * 1e9)) ** 2
    assert hot[1e-5] == pytest.approx(sat, rel=0.05)


def test_phase_zero_coupling(tmp_path):
    text = "[fixed]\nf_a = 1e9 Hz\nlambda = 0 Hz\n[axis.T]\nunit = K\nscale = log\nmin = 1e-3\nmax = 1\npoints = 4\n" \
           "[axis.tau]\nunit = s\nvalues = 1e-5, 1e-3\n"
    code, out = run(tmp_path, "qfi-phase", text=text)
    assert code == 0
    _, rows = read(out)
    assert all(r[2] == 0.0 for r in rows)


def test_coupler_map(tmp_path):
    code, out = run(tmp_path, "coupler-map")
    assert code == 0
    _, rows = read(out)
    assert all(r[2] == 0.0 for r in rows if r[0] == 0.0 or r[1] == 0.0)
    cell = [r for r in rows if r[0] == 5e6 and r[1] == 5e6]
    assert cell and cell[0][2] == pytest.approx(30.864e3, rel=1e-4)
    header, contours = read(tmp_path / "out_contours.csv")
    assert header == ["level_Hz", "chi_a1_Hz", "chi_b2_Hz", "lambda_Hz"]
    assert {r[0] for r in contours} == {1e4, 2e4, 3e4, 4e4, 5e4}
    for level, a, b, lam in contours:
        assert lam == pytest.approx(level, rel=1e-3)
        if level == 5e4:
            assert a * b == pytest.approx(40.5e12, rel=1e-3)


def test_visibility(tmp_path):
    code, out = run(tmp_path, "visibility")
    assert code == 0
    header, rows = read(out)
    assert header == ["tau_R_s", "chi_Hz", "visibility_chi_b", "visibility_chi_a"]
    assert all(r[2] == 1.0 and r[3] == 1.0 for r in rows if r[1] == 0.0)
    at = {r[1]: r[2] for r in rows if r[0] == pytest.approx(3e-6)}
    assert at[5e4] < at[2e4] < at[1e4] < 1.0


def test_visibility_quasi_static_example(tmp_path):
    # displaced-thermal variance 4 (alpha = 2, vacuum bath), slow decay
    text = "[fixed]\nalpha = 2 dimensionless\nn_bar_b = 0 dimensionless\nn_bar_a = 0 dimensionless\n" \
           "kappa_b = 1e-3 Hz\nkappa_a = 1e-3 Hz\n[axis.tau_R]\nunit = s\nvalues = 3e-6\n" \
           "[axis.chi]\nunit = Hz\nvalues = 2e4\n"
    code, out = run(tmp_path, "visibility", text=text)
    assert code == 0
    _, rows = read(out)
    assert rows[0][2] == pytest.approx(0.32, abs=0.01)


def test_compare(tmp_path):
    code, out = run(tmp_path, "compare")
    assert code == 0
    header, rows = read(out)
    assert header[:2] == ["tau_s", "qfi_coherence"]
    assert all(r[5] == 1.0 for r in rows)
    near_1us = min(rows, key=lambda r: abs(math.log(r[0] / 1e-6)))
    assert near_1us[1] > near_1us[2]
    assert rows[-1][1] < rows[-1][2]


def test_compare_phase_rate_without_overhead(tmp_path):
    text = open(os.path.join(os.path.dirname(cli.__file__), "configs", "compare.ini")).read()
    code, out = run(tmp_path, "compare", text=text.replace("tau_oh = 1e-5 s", "tau_oh = 0 s"))
    assert code == 0
    _, rows = read(out)
    rates = [r[8] for r in rows]
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_coupler_validate(tmp_path):
    code, out = run(tmp_path, "coupler-validate")
    assert code == 0
    header, rows = read(out)
    assert header[:4] == ["scale", "lambda_exact_Hz", "lambda_pert_Hz", "rel_error"]
    assert [r[0] for r in rows] == [1.0, 0.5, 0.25]
    assert rows[0][1] == pytest.approx(1.99400609861423, rel=1e-5)


@pytest.mark.parametrize(
    "text",
    [
        "[axis.T]\nunit = K\nmin = 1\nmax = 2\npoints = 1\n",
        "[fixed]\nf_a = 1e9 Hz\n",
        "[fixed]\nf_a = 1 GHz\n",
        "[run]\ncommand = compare\n",
        COHERENCE_POINT.replace("unit = K", "unit = s"),
        COHERENCE_POINT.replace("nu = 10000", "nu = 0.5"),
    ],
)
def test_config_errors_exit_1(tmp_path, text, capsys):
    code, _ = run(tmp_path, "qfi-coherence", text=text)
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_bad_seed_and_shots(tmp_path):
    assert run(tmp_path, "compare", "--seed", "-1")[0] == 1
    assert run(tmp_path, "compare", "--shots", "5")[0] == 1
    assert run(tmp_path, "compare", "--workers", "0")[0] == 1


def test_missing_config_file_is_io_error(tmp_path):
    assert cli.run(["compare", "-q", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "x.csv")]) == 3


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.run(["compare", "-q", "--out", str(blocker / "sub" / "x.csv")]) == 3


@pytest.fixture(scope="module")
def validate_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("validate")
    code = cli.run(["validate", "-q", "--out", str(d / "v.csv")])
    return code, d


def test_validate_passes(validate_run):
    code, d = validate_run
    assert code == 0
    report = json.loads((d / "v_report.json").read_text())
    assert report["hard_failures"] == []
    names = {c["name"] for c in report["checks"]}
    assert "coupler.ed_vs_pt_shrinks" in names
    assert any(n.startswith("envelope.closed_form_gap") for n in names)
    assert (d / "v_report.txt").read_text().count("\n") == len(report["checks"])


def test_validate_negative_control(tmp_path):
    code = cli.run(["validate", "-q", "--tolerance-scale", "0", "--out", str(tmp_path / "v.csv")])
    assert code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "thermoq", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("thermoq ")
