import csv
import io
import json
import subprocess
import sys

import pytest

from dramnet import fixtures
from dramnet.cli import main

ORPHAN = """device o {
  per bank b {
    place IDLE init 1;
    place LOST init 0;
    transition ACT;
    arc IDLE -> ACT;
    arc ACT -> IDLE;
  }
}
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_validate_fixtures(capsys):
    code, out, _ = run(capsys, "validate", *fixtures.NAMES)
    assert code == 0
    assert out.count(": ok") == len(fixtures.NAMES)


def test_validate_fixture_file_path(capsys):
    code, _, _ = run(capsys, "validate", str(fixtures.path("mini-ddr")))
    assert code == 0


def test_validate_orphan(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", write(tmp_path, "o.dram", ORPHAN))
    assert code == 1
    assert "orphaned place LOST@r0.b0" in out


def test_validate_deadlock(capsys, tmp_path):
    text = "device d { per rank r { place F init 1; transition T; arc F -> T; } }"
    code, out, _ = run(capsys, "validate", write(tmp_path, "d.dram", text), "--format", "json")
    assert code == 1
    assert json.loads(out)[0]["problems"] == ["deadlock after [T@r0]"]


def test_parse_error_exit_2(capsys, tmp_path):
    bad = write(tmp_path, "bad.dram", "device x {\n  per bank b {\n    place P init\n  }\n}\n")
    code, _, err = run(capsys, "validate", bad)
    assert code == 2
    assert "bad.dram:4:3:" in err


def test_missing_model_exit_2(capsys):
    code, _, err = run(capsys, "enumerate", "no-such-model")
    assert code == 2 and "no-such-model" in err


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", "mini-ddr", "-B", "1", "-k", "1")
    assert code == 0
    assert out.splitlines() == ["ACT@r0.b0", "PREA@r0", "REF@r0"]


def test_enumerate_rejects_k0(capsys):
    with pytest.raises(SystemExit) as info:
        main(["enumerate", "mini-ddr", "-k", "0"])
    assert info.value.code == 2


def test_enumerate_timed_with_override(capsys, tmp_path):
    out_file = tmp_path / "t.txt"
    code, out, _ = run(capsys, "enumerate", "mini-ddr", "-B", "1", "-k", "2", "--timed",
                       "--set", "tRCD=7", "-o", str(out_file))
    assert code == 0 and out == ""
    assert "ACT@r0.b0:0,RD@r0.b0:7" in out_file.read_text().splitlines()


def test_enumerate_budget_exit_3(capsys):
    code, _, err = run(capsys, "enumerate", "mini-ddr", "--budget", "3")
    assert code == 3 and "budget" in err


def test_bad_override(capsys):
    code, _, err = run(capsys, "enumerate", "mini-ddr", "--set", "tNOPE=3")
    assert code == 2 and "tNOPE" in err
    with pytest.raises(SystemExit):
        main(["enumerate", "mini-ddr", "--set", "tRCD"])


def test_compare_same(capsys):
    code, out, _ = run(capsys, "compare", "mini-ddr", "mini-ddr", "--format", "json")
    d = json.loads(out)
    assert code == 0
    assert d["jaccard"]["numerator"] == d["jaccard"]["denominator"] == 1
    assert d["tc_recall"]["decimal"] == 1.0


def test_compare_mutant_prints_witness(capsys):
    code, out, _ = run(capsys, "compare", "mini-ddr-pwr", "mini-ddr", "-k", "2")
    assert code == 0
    assert "only in gen: " in out and "PDE@r0" in out
    assert "extra: intra_rank PDE -> PDX : tCKE" in out


def test_compare_extra_constraints_keep_recall(capsys, tmp_path):
    text = fixtures.text("mini-ddr").replace(
        "  timing intra_rank [ACT] -> [ACT] : tRRD;",
        "  timing intra_rank [ACT] -> [ACT] : tRRD;\n  timing intra_bank [RD] -> [PRE] : 4;")
    gen = write(tmp_path, "gen.dram", text)
    code, out, _ = run(capsys, "timing-recall", gen, "mini-ddr")
    assert code == 0
    assert out.splitlines()[0] == "tc_recall: 1/1 (1.0000)"
    assert "extra: intra_bank RD -> PRE : 4" in out


def test_compare_budget_partial(capsys):
    code, out, _ = run(capsys, "compare", "mini-ddr", "mini-ddr", "--budget", "2", "--format", "json")
    assert code == 3 and json.loads(out)["partial"]


def test_compare_csv_quotes_traces(capsys):
    code, out, _ = run(capsys, "compare", "mini-ddr-pwr", "mini-ddr", "-k", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["kind", "only_in", "value"]
    assert any(r[0] == "witness" and "," in r[2] for r in rows)


def test_conjecture_check(capsys):
    a, b = fixtures.EQUIVALENT_PAIR
    code, out, _ = run(capsys, "conjecture-check", a, b)
    assert code == 0 and out.startswith("verdict: conjectured-equivalent")
    code, out, _ = run(capsys, "conjecture-check", "mini-ddr", "mini-ddr-pwr", "--format", "json")
    assert code == 1 and json.loads(out)["verdict"] == "inequivalent"


def test_mutate(capsys, tmp_path):
    with pytest.raises(SystemExit):
        main(["mutate", "--count", "0"])
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        code, _, err = run(capsys, "mutate", "--count", "15", "--seed", "3", "--format", "json",
                           "-o", str(p))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    d = json.loads(a.read_text())
    assert err.strip() == (f"15 mutants: {d['detected']} detected "
                           f"({d['detected'] / 15:.1%}), {d['equivalent_mutants']} equivalent, "
                           f"0 undetected non-equivalent, 0 budget errors; deep-checked 0")
    assert {m["fixture"] for m in d["mutants"]} == set(fixtures.NAMES)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dramnet", "enumerate", "guard-token", "-B", "1",
                          "-k", "1"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.splitlines() == ["ACT@r0.b0", "PREA@r0", "REF@r0"]
