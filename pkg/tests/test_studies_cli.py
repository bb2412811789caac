import io
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from abelfem.assembly import load_system
from abelfem.cli import main
from abelfem.config import ConfigError, parse_admissibility, parse_config, read_config
from abelfem.studies import (
    CSV_HEADER,
    ConvergenceReport,
    Row,
    StudyConfig,
    parse_order_mode,
    read_sweep_csv,
    run_alpha_sweep,
    run_convergence,
    run_fixed_order_study,
)


def _run(argv, capsys=None):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


# ---------------------------------------------------------------- config


def test_defaults_and_order_mode():
    c = parse_config(None, {"problem": "exp1", "m": 1, "n_list": [64]})
    assert c.order_mode == "s2" and c.threads == 1 and c.n_modes is None
    assert parse_order_mode("s3") == {"prefactor_index": 3}
    assert parse_order_mode("fixed:4") == {"fixed_order": 4}
    for bad in ("s6", "s0", "fixed:x", "fixed:0", "adaptive"):
        with pytest.raises(ValueError):
            parse_order_mode(bad)


def test_alpha_rejected_with_range():
    with pytest.raises(ConfigError, match=r"\(0, 1\)"):
        parse_config(None, {"alpha": 1.0})


@pytest.mark.parametrize("n_list", [[], [64, 32], [32, 32], [0]])
def test_bad_n_list(n_list):
    with pytest.raises(ConfigError):
        parse_config(None, {"n_list": n_list})


def test_size_guard():
    with pytest.raises(ConfigError, match="allow_large"):
        parse_config(None, {"m": 1, "n_list": [2048]})
    assert parse_config(None, {"m": 1, "n_list": [2048], "allow_large": True}).allow_large
    assert parse_config(None, {"m": 0, "n_list": [4096]}).n_list == [4096]


def test_file_and_override(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("[study]\nproblem = exp2:alpha=0.3\nm = 0\nn_list = 2^5, 2^6\nallow_large = false\nout_csv = x.csv  # comment\n")
    c = parse_config(p, {"m": 1})
    assert c.problem == "exp2:alpha=0.3" and c.m == 1 and c.n_list == [32, 64] and c.out_csv == "x.csv"


@pytest.mark.parametrize(
    "text,match",
    [
        ("[study]\nbogus = 1\n", "bogus"),
        ("[other]\nm = 1\n", "other"),
        ("[study]\nallow_large = yes\n", "true or false"),
        ("[study]\nm = one\n", "'m'"),
        ("m = 1\n", "malformed"),
    ],
)
def test_file_errors(tmp_path, text, match):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(ConfigError, match=match):
        parse_config(p)


def test_admissibility_config(tmp_path):
    p = tmp_path / "adm.cfg"
    p.write_text("[admissibility]\nalpha = 0.5\nd = 1,1:1.1; 2,2:-0.1\nc = 2:0.7071067811865476\nC = 2:2.8284271247461903\n")
    inp = parse_admissibility(p)
    assert inp.d == {(1, 1): 1.1, (2, 2): -0.1} and inp.upper(2) == pytest.approx(2 * math.sqrt(2))
    assert read_config(p)["admissibility"]["C"].startswith("2:")
    p.write_text("[admissibility]\nd = 1:1\n")
    with pytest.raises(ConfigError):
        parse_admissibility(p)


# ---------------------------------------------------------------- reports


def test_report_rates_and_slope():
    rows = [Row(N, 1 / N, N, 3.0 * N**-1.5, 0.1 * N**-1.5) for N in (8, 16, 32, 64)]
    rep = ConvergenceReport(rows)
    assert math.isnan(rows[0].rate)
    np.testing.assert_allclose(rep.rates, 1.5)
    assert rep.slope == pytest.approx(1.5) and rep.slope_residual < 1e-12


def test_single_row_report():
    rep = ConvergenceReport([Row(8, 0.125, 8, 1e-3, 1e-2)])
    assert rep.rates == [] and math.isnan(rep.slope)


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    rows = [Row(N, 1 / N, N + 1, float(e), float(e) * 3.7) for N, e in zip((32, 64, 128), rng.uniform(1e-9, 1e-3, 3))]
    rep = ConvergenceReport(rows)
    path = tmp_path / "r.csv"
    rep.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    back = ConvergenceReport.from_csv(path)
    for a, b in zip(rep.rows, back.rows):
        assert (a.N, a.h, a.M, a.error, a.rel_error) == (b.N, b.h, b.M, b.error, b.rel_error)
        assert a.rate == b.rate or (math.isnan(a.rate) and math.isnan(b.rate))
    assert float(lines[2].split(",")[-1]) == rep.rows[1].rate


def test_run_convergence_outputs(tmp_path):
    cfg = StudyConfig(m=1, n_list=[8, 16, 32], out_csv=str(tmp_path / "c.csv"), out_svg=str(tmp_path / "c.svg"))
    rep = run_convergence(cfg)
    assert [r.N for r in rep.rows] == [8, 16, 32]
    assert all(r.error > 0 and r.rel_error > 0 for r in rep.rows)
    assert rep.rows[-1].error < rep.rows[0].error
    root = ET.parse(tmp_path / "c.svg").getroot()
    ns = "{http://www.w3.org/2000/svg}"
    lines = root.findall(f"{ns}polyline")
    assert len(lines) == 2 and any("stroke-dasharray" in p.attrib for p in lines)


def test_deterministic_and_thread_independent():
    a = run_convergence(StudyConfig(m=1, n_list=[48], threads=1))
    b = run_convergence(StudyConfig(m=1, n_list=[48], threads=2))
    assert a.rows[0].error == b.rows[0].error


def test_fixed_order_study(tmp_path):
    cfg = StudyConfig(m=1, n_list=[16, 32], fixed_orders=[2, 10], out_csv=str(tmp_path / "f.csv"))
    st = run_fixed_order_study(cfg)
    assert set(st.reports) == {2, 10}
    assert st.pollution_ratio == pytest.approx(st.reports[2].rows[-1].error / st.reports[10].rows[-1].error)
    assert (tmp_path / "f_n2.csv").exists() and (tmp_path / "f_n10.csv").exists()


def test_alpha_sweep(tmp_path):
    cfg = StudyConfig(m=0, n_list=[16], alphas=[0.2, 0.7], out_csv=str(tmp_path / "s.csv"), out_svg=str(tmp_path / "s.svg"))
    rows = run_alpha_sweep(cfg)
    assert [r.alpha for r in rows] == [0.2, 0.7]
    back = read_sweep_csv(tmp_path / "s.csv")
    assert [(r.alpha, r.rel_error) for r in back] == [(r.alpha, r.rel_error) for r in rows]
    ET.parse(tmp_path / "s.svg")


# ---------------------------------------------------------------- CLI


def test_cli_solve_minimal():
    code, out = _run(["solve", "--problem", "exp1", "--m", "1", "--n", "64"])
    assert code == 0 and "N=64 M=65" in out


def test_cli_dump(tmp_path):
    path = tmp_path / "sys.bin"
    code, _ = _run(["solve", "--m", "2", "--n", "4", "--dump", str(path)])
    assert code == 0
    A, r = load_system(path)
    assert A.shape == (9, 9) and r.shape == (9,)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--alpha", "1.0", "--n", "8"],
        ["solve", "--problem", "nope", "--n", "8"],
        ["solve", "--order-mode", "s9", "--n", "8"],
        ["convergence", "--m", "1", "--n-list", "2048"],
        ["convergence", "--n-list", "64,32"],
        ["solve", "--config", "/nonexistent.cfg"],
        ["frobnicate"],
        ["solve", "--m", "x"],
    ],
)
def test_cli_config_errors(argv):
    assert _run(argv)[0] == 2


def test_cli_threads_env(monkeypatch):
    monkeypatch.setenv("ABELFEM_THREADS", "-1")
    assert _run(["solve", "--n", "8"])[0] == 2
    assert _run(["solve", "--n", "8", "--threads", "2"])[0] == 0


def test_cli_numerical_failure(monkeypatch):
    import abelfem.cli as cli
    from abelfem.solve import SingularSystemError

    def boom(*a, **k):
        raise SingularSystemError(0, 0.0)

    monkeypatch.setattr(cli, "solve", boom)
    assert _run(["solve", "--n", "8"])[0] == 3


def test_cli_convergence_csv(tmp_path):
    csv = tmp_path / "c.csv"
    code, out = _run(["convergence", "--m", "0", "--n-list", "8,16", "--out-csv", str(csv), "--out-svg", str(tmp_path / "c.svg")])
    assert code == 0 and "slope" in out
    assert csv.read_text().startswith("N,h,M,error,rel_error,rate\n")


def test_cli_fixed_order_and_sweep():
    code, out = _run(["fixed-order", "--m", "0", "--n-list", "8,16", "--orders", "2,3"])
    assert code == 0 and "n1=2" in out
    code, out = _run(["alpha-sweep", "--m", "0", "--n", "8", "--alphas", "0.3,0.6"])
    assert code == 0 and "0.60" in out


def test_cli_quad_check():
    code, out = _run(["quad-check", "--n-max", "5"])
    assert code == 0 and "legendre" in out and "jacobi" in out


def test_cli_admissibility(tmp_path):
    p = tmp_path / "adm.cfg"
    p.write_text("[admissibility]\nd = 1,1:1.1; 2,2:-0.1\nc = 2:0.7071067811865476\nC = 2:2.8284271247461903\n")
    code, out = _run(["admissibility", "--config", str(p), "--alpha", "0.5"])
    assert code == 0
    vals = dict(line.split(None, 1) for line in out.splitlines())
    assert float(vals["C_s^2"]) == pytest.approx(1.9, abs=1e-15)
    assert float(vals["gamma_tilde"]) == pytest.approx(1.05 * math.cos(math.pi / 4), abs=1e-15)
    assert vals["admissible"].strip() == "true"
