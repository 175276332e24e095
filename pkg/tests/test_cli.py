import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from abstention import cli

HEADER = "q,qbar,lambda,delta,fidelity,one_minus_f,scaled_smin,q_star,kkt_residual,iterations,converged"


def run(argv, capsys):
    rc = cli.main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_solve_flat_zero_abstention(capsys):
    rc, out, _ = run(["solve", "--task", "phase", "--family", "flat", "--n", "10", "--q", "0"], capsys)
    assert rc == 0
    assert out.splitlines()[0] == HEADER
    (row,) = rows_of(out)
    assert float(row["fidelity"]) == pytest.approx(1 - 1 / 22, abs=1e-10)
    assert row["converged"] == "true"


def test_solve_flat_plateau(capsys):
    rc, out, _ = run(["solve", "--task", "phase", "--family", "flat", "--n", "10", "--q", "0.6"], capsys)
    assert rc == 0
    (row,) = rows_of(out)
    assert float(row["fidelity"]) == pytest.approx((1 + math.cos(math.pi / 12)) / 2, abs=1e-12)
    assert float(row["q_star"]) == pytest.approx(10 / 22, abs=1e-12)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--task", "phase", "--family", "flat", "--n", "10", "--q", "1.2"],
        ["solve", "--task", "phase", "--family", "flat", "--n", "10", "--q", "-0.1"],
        ["solve", "--task", "phase", "--family", "flat", "--n", "0", "--q", "0.1"],
        ["solve", "--task", "direction", "--family", "equator", "--n", "10", "--q", "0.1"],
        ["solve", "--task", "phase", "--family", "nonsense", "--n", "10", "--q", "0.1"],
        ["sweep", "--task", "phase", "--family", "flat", "--n", "10", "--q-grid", "0.5:0.2:0.1"],
        ["sweep", "--task", "phase", "--family", "flat", "--n", "10", "--q-grid", "0.1:0.5:0"],
        ["sweep", "--task", "phase", "--family", "flat", "--n", "10", "--q-grid", "bad"],
        ["compare", "--preset", "fig99"],
        ["asympt", "--task", "phase", "--family", "flat", "--n", "10", "--q", "0.1"],
        ["solve", "--task", "phase", "--family", "custom", "--coeff-file", "/nonexistent/file", "--q", "0.1"],
        ["solve", "--bogus"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    rc, _, _ = run(argv, capsys)
    assert rc == 2


def test_nonconvergence_exit_3(monkeypatch, capsys):
    real = cli.solve_abstention

    def stubborn(*a, **k):
        res = real(*a, **k)
        res.converged = False
        return res

    monkeypatch.setattr(cli, "solve_abstention", stubborn)
    rc, out, _ = run(["solve", "--task", "phase", "--family", "flat", "--n", "8", "--q", "0.2"], capsys)
    assert rc == 3
    assert rows_of(out)[0]["converged"] == "false"


def test_antiparallel_sweep_rows_monotone(capsys):
    rc, out, _ = run(["sweep", "--task", "direction", "--family", "antiparallel", "--n", "100", "--q-grid", "0.05:0.95:0.05"], capsys)
    assert rc == 0
    rows = rows_of(out)
    assert len(rows) == 19
    qs = [float(r["q"]) for r in rows]
    assert qs == sorted(qs)
    fid = [float(r["fidelity"]) for r in rows]
    assert all(b >= a - 1e-14 for a, b in zip(fid, fid[1:]))


def test_flat_sweep_fig1_shape(capsys):
    rc, out, _ = run(["compare", "--preset", "fig1", "--task", "phase", "--family", "flat"], capsys)
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == HEADER + ",asymptotic_smin,rel_dev"
    assert len(lines) == 20


def test_fig2_preset_mid_grid(capsys):
    rc, out, _ = run(["compare", "--preset", "fig2"], capsys)
    assert rc == 0
    rows = rows_of(out)
    mid = [r for r in rows if 0.1 - 1e-9 <= float(r["q"]) <= 0.9 + 1e-9]
    assert mid and all(abs(float(r["rel_dev"])) < 0.05 for r in mid)


def test_fig4_preset_q01_n120(capsys):
    rc, out, _ = run(["compare", "--preset", "fig4", "--n", "120"], capsys)
    assert rc == 0
    rows = {round(float(r["q"]), 6): r for r in rows_of(out)}
    assert abs(float(rows[0.1]["rel_dev"])) < 0.10


def test_json_output_mirrors_fields(capsys):
    rc, out, _ = run(["sweep", "--task", "phase", "--family", "equator", "--n", "12", "--q-grid", "0:0.4:0.2", "--format", "json"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert len(data) == 3
    for rec in data:
        assert set(cli.FIELDS) <= set(rec)
        assert isinstance(rec["converged"], bool)
        assert isinstance(rec["coincidence_size"], int)


def test_asympt_command(capsys):
    rc, out, _ = run(["asympt", "--scenario", "direction_povm", "--n", "50", "--q-grid", "0.1:0.9:0.1"], capsys)
    assert rc == 0
    rows = rows_of(out)
    assert len(rows) == 9
    # plateau beyond the critical abstention
    tail = [float(r["scaled_smin"]) for r in rows if float(r["q"]) > 0.75]
    assert tail and max(tail) - min(tail) < 1e-12


def test_coeff_file_and_out_path(tmp_path, capsys):
    f = tmp_path / "c.txt"
    f.write_text("# flat\n" + "\n".join(["1"] * 11) + "\n")
    dest = tmp_path / "r.csv"
    rc, out, _ = run(["solve", "--task", "phase", "--family", "custom", "--coeff-file", str(f), "--q", "0", "--out", str(dest)], capsys)
    assert rc == 0 and out == ""
    (row,) = rows_of(dest.read_text())
    assert float(row["fidelity"]) == pytest.approx(1 - 1 / 22, abs=1e-10)


def test_seventeen_digit_round_trip(capsys):
    _, out, _ = run(["solve", "--task", "frame_rydberg", "--family", "ramp", "--n", "20", "--q", "0.3"], capsys)
    row = rows_of(out)[0]
    v = float(row["delta"])
    assert "%.17g" % v == row["delta"]


def _sweep_bytes(threads, tmp_path):
    env = dict(os.environ, ABST_THREADS=str(threads))
    dest = tmp_path / f"out{threads}.csv"
    cmd = [sys.executable, "-m", "abstention", "sweep", "--task", "frame_rydberg", "--family", "ramp", "--n", "40", "--q-grid", "0:0.9:0.1", "--seed", "7", "--out", str(dest)]
    subprocess.run(cmd, env=env, check=True, timeout=300)
    return dest.read_bytes()


def test_byte_deterministic_across_thread_counts(tmp_path):
    a = _sweep_bytes(1, tmp_path)
    b = _sweep_bytes(4, tmp_path)
    assert a == b
    assert a.startswith(HEADER.encode())
