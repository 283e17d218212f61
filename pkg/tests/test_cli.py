import json
import subprocess
import sys

import pytest

from rlcap.cli import main
from rlcap.capacity import solve_capacity
from rlcap.genfun import eval_gw
from rlcap.maxent import canonical_support
from rlcap.specfile import SpecError, dump_spec, load_spec, system_from_dict, system_to_dict
from systems import ASYNC2, DEGENERATE, FIB, LN2, MIXED, NATURALS, PI_SYSTEM


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def spec(tmp_path):
    def write(system, name="s"):
        path = tmp_path / f"{name}.json"
        dump_spec(system, path)
        return str(path)

    return write


def test_capacity_rll(capsys):
    code, out, _ = run(capsys, "capacity", "rll", "--kmax", "2")
    assert code == 0 and out.strip() == "0.4812118251 nats"


def test_capacity_async(capsys):
    code, out, _ = run(capsys, "capacity", "async", "--xi", "2", "--labels", "2", "--json")
    assert code == 0
    env = json.loads(out)
    assert env["command"] == "capacity" and env["seed"] is None
    r = env["result"]
    assert r["capacity"] == pytest.approx(solve_capacity(ASYNC2).capacity, abs=1e-12)
    assert r["residual"] <= env["tolerances"]["residual_tol"][0]


def test_capacity_degenerate_exit_2(capsys, spec):
    code, out, _ = run(capsys, "capacity", spec(DEGENERATE))
    assert code == 2
    assert out.splitlines()[0] == "0.0000000000 nats"


def test_capacity_bits_and_many_files(capsys, spec):
    a, b = spec(NATURALS, "a"), spec(FIB, "b")
    code, out, _ = run(capsys, "capacity", a, b, "--bits", "--jobs", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "1.0000000000 bits"
    assert float(lines[1].split()[0]) == pytest.approx(solve_capacity(FIB).bits, abs=1e-10)


def test_genfun(capsys, spec):
    code, out, _ = run(capsys, "genfun", spec(NATURALS), "--at", repr(LN2))
    assert code == 0 and float(out) == pytest.approx(1.0, abs=1e-15)
    code, out, _ = run(capsys, "genfun", "rll", "--kmax", "2", "--at", "C", "--which", "support")
    assert code == 0 and float(out) == pytest.approx(1.0, abs=1e-9)
    code, out, _ = run(capsys, "genfun", spec(MIXED), "--at", "3", "--json")
    env = json.loads(out)
    ref = eval_gw(MIXED.runs, 3.0)
    assert env["result"]["value"] == ref.value and env["result"]["tail_bound"] == ref.tail_bound


def test_genfun_divergence(capsys):
    code, _, err = run(capsys, "genfun", "rll", "--kmax", "2", "--at", "0.1", "--which", "system")
    assert code == 1 and "diverges" in err


def test_enumerate_rows(capsys):
    code, out, _ = run(capsys, "enumerate", "rll", "--kmax", "2", "--max-weight", "5")
    assert code == 0
    assert [ln.split(",")[1] for ln in out.splitlines()[1:]] == ["2", "4", "6", "10", "16"]
    code, out, _ = run(capsys, "enumerate", "rll", "--kmax", "1", "--max-weight", "12")
    assert {ln.split(",")[1] for ln in out.splitlines()[1:]} == {"2"}


def test_enumerate_delta_and_file(capsys, tmp_path):
    path = tmp_path / "counts.csv"
    code, _, _ = run(capsys, "enumerate", "rll", "--kmax", "2", "--max-weight", "5", "--delta", "2",
                     "--csv", str(path))
    assert code == 0
    rows = path.read_text().splitlines()
    assert rows[0].endswith("n_delta,c_delta")
    assert rows[3].split(",")[4] == "10"


def test_enumerate_off_grid(capsys, spec):
    code, _, err = run(capsys, "enumerate", spec(PI_SYSTEM), "--max-weight", "10")
    assert code == 1 and "pi" in err


def test_sample_determinism():
    cmd = [sys.executable, "-m", "rlcap", "sample", "async", "--xi", "3/2", "--labels", "3",
           "--blocks", "40", "--seed", "99"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and len(a.splitlines()) == 40


def test_sample_json(capsys, spec):
    code, out, _ = run(capsys, "sample", spec(FIB), "--blocks", "5", "--json", "--seed", "4")
    env = json.loads(out)
    assert env["seed"] == 4 and len(env["result"]["blocks"]) == 5
    for lp, b in zip(env["result"]["log_probs"], env["result"]["blocks"]):
        assert lp < 0 and b.startswith("0:")


def test_validate_ambiguity_file(capsys, spec, tmp_path):
    support = tmp_path / "support.txt"
    support.write_text("# two single runs of the same label\nred:1\nred:2\n")
    code, out, _ = run(capsys, "validate", spec(PI_SYSTEM), "--support", str(support), "--depth", "2")
    assert code == 2
    assert "ambiguity" in out and "[red:2]" in out


def test_validate_closure_file(capsys, spec, tmp_path):
    support = tmp_path / "support.txt"
    support.write_text("red:pi\n")
    code, out, _ = run(capsys, "validate", spec(PI_SYSTEM), "--support", str(support), "--depth", "2")
    assert code == 2 and "red:2*pi" in out


def test_validate_canonical(capsys):
    code, out, _ = run(capsys, "validate", "rll", "--kmax", "2", "--canonical-weight", "4")
    assert code == 0 and out.startswith("valid")
    n = len(canonical_support(FIB, None, 4))
    assert f"{n} blocks" in out


def test_validate_needs_candidate(capsys):
    code, _, err = run(capsys, "validate", "rll", "--kmax", "2")
    assert code == 1 and "needs" in err


def test_missing_preset_argument(capsys):
    code, _, err = run(capsys, "capacity", "rll")
    assert code == 1 and "--kmax" in err


def test_single_system_commands(capsys, spec):
    code, _, err = run(capsys, "genfun", spec(FIB, "a"), spec(FIB, "b"), "--at", "1")
    assert code == 1


def test_spec_roundtrip(tmp_path):
    for sys_ in [FIB, MIXED, PI_SYSTEM, ASYNC2]:
        path = tmp_path / "x.json"
        dump_spec(sys_, path)
        back = load_spec(path).system
        assert system_to_dict(back) == system_to_dict(sys_)
        assert back.runs == sys_.runs


def test_spec_errors(tmp_path):
    with pytest.raises(SpecError):
        system_from_dict({"labels": ["a", "b"]})
    with pytest.raises(SpecError):
        system_from_dict({"labels": ["a", "b"], "runs": [{"kind": "spiral"}]})
    with pytest.raises(SpecError):
        system_from_dict({"labels": ["a", "b"], "runs": [{"kind": "arithmetic", "first": 1}]})
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(SpecError):
        load_spec(bad)


def test_spec_number_types():
    s = system_from_dict({"labels": [0, 1], "runs": [{"kind": "explicit", "weights": [1, "3/2", "pi", 0.5]}]})
    ws = list(s.system.runs.iter_weights())
    assert [w.is_real for w in ws] == [True, False, False, False]
    assert str(ws[3]) == "pi"
