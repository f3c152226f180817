import subprocess
import sys

import numpy as np
import pytest

from weakprotect.channel import (
    CanonicalParams,
    conjugate,
    depolarizing,
    from_canonical,
    identity_channel,
    random_unitary,
    remix,
    unitary_channel,
)
from weakprotect.channelfile import ParseError, dump_kraus, parse_channel_spec, read_csv
from weakprotect.cli import main
from weakprotect.optimizer import optimize
from weakprotect.qmath import SIGMA_Z


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_kv(text):
    return dict(line.split(" = ", 1) for line in text.splitlines() if " = " in line)


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write


AD_KRAUS = """label: amplitude damping
kraus:
  - [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.8, 0.0]]]
  - [[[0.0, 0.0], [0.6, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
"""


def test_validate_amplitude_damping(capsys, write):
    code, out, _ = run(capsys, "validate", write("ad.yaml", AD_KRAUS))
    kv = parse_kv(out)
    assert code == 0
    assert kv["cpt"] == "pass"
    assert kv["pure_invariant_state"] == "alpha=0.0 beta=0.0"


def test_validate_not_trace_preserving(capsys, write):
    path = write("bad.yaml", "kraus:\n  - [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]\n")
    code, out, err = run(capsys, "validate", path)
    assert code == 2
    assert float(parse_kv(out)["tp_defect"]) == pytest.approx(0.75)
    assert "tp_defect" in err


def test_validate_depolarizing(capsys, write):
    code, out, err = run(capsys, "validate", write("dep.yaml", dump_kraus(depolarizing(0.3))))
    assert code == 0
    assert parse_kv(out)["pure_invariant_state"] == "none"
    assert "no pure invariant state" in err


@pytest.mark.parametrize("text", [
    "kraus: [[[1, 0]]]",
    "canonical: {y0: 0.5, x: 0.5, y: 0.5}",
    "canonical: {y0: 1, x: 0, y: 0}\nkraus: []",
    "label: only",
    "canonical: {y0: '1,0', x: 0, y: 0}",
    "{unbalanced",
])
def test_parse_errors(capsys, write, text):
    code, _, err = run(capsys, "validate", write("x.yaml", text))
    assert code == 64
    assert err


def test_missing_file(capsys, tmp_path):
    assert run(capsys, "validate", tmp_path / "nope.yaml")[0] == 64


def test_scientific_notation_accepted():
    spec = parse_channel_spec("canonical: {y0: 1e-3, x: 0, y: 0.9999995}")
    assert spec.canonical.y0 == 1e-3


def test_kraus_round_trip(rng):
    c = conjugate(from_canonical(CanonicalParams(0.6, 0.48, 0.64, 1.0, 2.0)), random_unitary(rng))
    back = parse_channel_spec(dump_kraus(c, "x")).channel
    for a, b in zip(c.kraus, back.kraus):
        np.testing.assert_array_equal(a, b)


def test_parse_error_type():
    with pytest.raises(ParseError):
        parse_channel_spec("- just a list")


def test_canonicalize_sigma_z(capsys, write):
    code, out, _ = run(capsys, "canonicalize", write("z.yaml", dump_kraus(unitary_channel(SIGMA_Z))))
    kv = parse_kv(out)
    assert code == 0 and float(kv["y0"]) == -1.0
    assert float(kv["certificate"]) <= 1e-9


def test_canonicalize_identity(capsys, write):
    code, out, _ = run(capsys, "canonicalize", write("i.yaml", dump_kraus(identity_channel())))
    assert code == 0 and float(parse_kv(out)["y0"]) == 1.0


def test_canonicalize_round_trip_and_write(capsys, write, tmp_path, rng):
    p = CanonicalParams(0.48, 0.6, 0.64, 0.9, 4.0)
    scrambled = remix(conjugate(from_canonical(p), random_unitary(rng)), random_unitary(rng, 4))
    out_path = tmp_path / "canon.yaml"
    code, out, _ = run(capsys, "canonicalize", write("r.yaml", dump_kraus(scrambled)), "--write", out_path)
    kv = parse_kv(out)
    assert code == 0
    for name in ("y0", "x", "y"):
        assert float(kv[name]) == pytest.approx(getattr(p, name), abs=1e-9)
    spec = parse_channel_spec(out_path.read_text())
    assert spec.canonical.y0 == float(kv["y0"])


def test_canonicalize_no_invariant_state(capsys, write):
    code, _, err = run(capsys, "canonicalize", write("dep.yaml", dump_kraus(depolarizing(0.3))))
    assert code == 3 and "invariant" in err


def test_evaluate_identity(capsys, write):
    path = write("id.yaml", "canonical: {y0: 1, x: 0, y: 0}\n")
    code, out, _ = run(capsys, "evaluate", path, "--p", 0, "--q", 0)
    kv = parse_kv(out)
    assert code == 0
    assert float(kv["F_n_base"]) == pytest.approx(1)
    assert float(kv["delta_F"]) == pytest.approx(0, abs=1e-15)
    assert float(kv["P_success"]) == pytest.approx(1)


@pytest.mark.parametrize("p", [0.0, 0.5, 0.9])
def test_evaluate_sigma_z(capsys, write, p):
    path = write("z.yaml", dump_kraus(unitary_channel(SIGMA_Z)))
    code, out, _ = run(capsys, "evaluate", path, "--p", p, "--q", 1)
    assert code == 0
    assert float(parse_kv(out)["delta_F"]) == pytest.approx(1 / 3, abs=1e-12)


def test_evaluate_optimal_q_amplitude_damping(capsys, write):
    path = write("ad.yaml", AD_KRAUS)
    code, out, _ = run(capsys, "evaluate", path, "--p", 0.9, "--q", "opt")
    kv = parse_kv(out)
    opt = optimize(CanonicalParams(0.8, 0.6, 0.0), 0.9)
    assert code == 0 and kv["q_branch"] == opt.branch
    assert float(kv["q"]) == pytest.approx(opt.q_opt, abs=1e-12)
    assert float(kv["delta_F"]) == pytest.approx(opt.delta_f, abs=1e-12)
    assert float(kv["P_success"]) == pytest.approx(opt.p_success_avg, abs=1e-12)


def test_evaluate_monte_carlo_agrees(capsys, write):
    path = write("ad.yaml", AD_KRAUS)
    code, out, _ = run(capsys, "evaluate", path, "--p", 0.9, "--q", 0.95, "--method", "mc", "--samples", 100_000)
    assert code == 0 and parse_kv(out)["agree_3sigma"] == "yes"


def test_evaluate_degenerate(capsys, write):
    path = write("full.yaml", "canonical: {y0: 0, x: 1, y: 0}\n")
    code, _, err = run(capsys, "evaluate", path, "--p", 1, "--q", 1)
    assert code == 4


def test_evaluate_bad_q(capsys, write):
    path = write("ad.yaml", AD_KRAUS)
    assert run(capsys, "evaluate", path, "--p", 0.9, "--q", "best")[0] == 64
    assert run(capsys, "evaluate", path, "--p", 1.5, "--q", 0.5)[0] == 64


def test_simulate_identity(capsys, write):
    path = write("id.yaml", "canonical: {y0: 1, x: 0, y: 0}\n")
    code, out, _ = run(capsys, "simulate", path, "--p", 0, "--q", 0, "--samples", 10_000)
    kv = parse_kv(out)
    assert code == 0
    assert float(kv["F_n"]) == pytest.approx(1, abs=1e-12)
    assert float(kv["F_n_stderr"]) <= 1e-12


def test_simulate_sigma_z(capsys, write):
    path = write("z.yaml", dump_kraus(unitary_channel(SIGMA_Z)))
    code, out, _ = run(capsys, "simulate", path, "--p", 0, "--q", 0, "--samples", 1_000_000)
    kv = parse_kv(out)
    assert abs(float(kv["F_n"]) - 1 / 3) <= 3 * float(kv["F_n_stderr"])


def test_simulate_at_optimum(capsys, write):
    path = write("ad.yaml", AD_KRAUS)
    code, out, _ = run(capsys, "simulate", path, "--p", 0.9, "--q", "opt", "--samples", 400_000)
    kv = parse_kv(out)
    assert abs(float(kv["F_n"]) - float(kv["F_n_exact"])) <= 3 * float(kv["F_n_stderr"])


def test_simulate_min_samples(capsys, write):
    assert run(capsys, "simulate", write("ad.yaml", AD_KRAUS), "--p", 0.5, "--q", 0.5, "--samples", 10)[0] == 64


def test_sweep_defaults(capsys, tmp_path):
    out_path = tmp_path / "fig.csv"
    code, _, _ = run(capsys, "sweep", "--out", out_path)
    assert code == 0
    raw = out_path.read_bytes()
    assert b"\r" not in raw
    rows = read_csv(raw.decode())
    assert len(rows) == 600
    assert rows == sorted(rows, key=lambda r: (r[0], r[1]))
    assert max(r[4] for r in rows if r[0] == -0.9) >= 0.30
    top = [r for r in rows if r[0] == 0.9]
    assert top[0][4] == pytest.approx(0, abs=1e-12) and top[1][4] < top[-1][4]


def test_sweep_stdout_and_bad_list(capsys):
    code, out, _ = run(capsys, "sweep", "--y0", "0.5", "--grid", 4)
    assert code == 0 and out.splitlines()[0] == "y0,xx,p,q_opt,delta_f,p_success"
    assert len(out.splitlines()) == 5
    assert run(capsys, "sweep", "--y0", "a,b")[0] == 64
    assert run(capsys, "sweep", "--y0", "2.0")[0] == 64


def test_sweep_unwritable(capsys, tmp_path):
    assert run(capsys, "sweep", "--grid", 2, "--out", tmp_path / "missing" / "x.csv")[0] == 64


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    subprocess.run([sys.executable, "-m", "weakprotect", "sweep", "--grid", "5", "--out", str(out)], check=True)
    assert len(out.read_text().splitlines()) == 31
