import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from ssgtree import cli

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"

ODO = str(CORPUS_DIR / "odometer.ssg")
GRIG = str(CORPUS_DIR / "grigorchuk.ssg")
BAS = str(CORPUS_DIR / "basilica.ssg")
TRIV = str(CORPUS_DIR / "trivial.ssg")
FIN = str(CORPUS_DIR / "finite_ends.ssg")
VIOL = str(CORPUS_DIR / "prop4_violator.ssg")


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def validator():
    text = (resources.files("ssgtree.schema")
            .joinpath("cli-output.schema.json").read_text())
    return jsonschema.Draft202012Validator(json.loads(text))


def test_corpus_files_exist():
    for p in (ODO, GRIG, BAS, TRIV, FIN, VIOL):
        assert Path(p).is_file()


# -- text mode and exit codes --------------------------------------------------

def test_ends_no_ends_text(capsys):
    code, out, err = run(["ends", ODO, "--element", "a"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "NoEnds, certificate k=1"
    assert err == ""


def test_ends_finite_text(capsys):
    code, out, _ = run(["ends", FIN, "--element", "s"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "FinitelyMany(1)"


def test_nucleus_text(capsys):
    code, out, _ = run(["nucleus", GRIG], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("nucleus size 5")
    assert set(l.strip() for l in lines[1:]) == {"1", "a", "b", "c", "d"}


def test_dichotomy_violation_exits_one(capsys):
    code, out, _ = run(["dichotomy", FIN, "--word-len", "2"], capsys)
    assert code == 1
    assert "violations" in out


def test_dichotomy_clean_exits_zero(capsys):
    code, out, _ = run(["dichotomy", ODO, "--word-len", "3"], capsys)
    assert code == 0
    assert out.startswith("0 violations")


def test_quotient_text(capsys):
    code, out, _ = run(["quotient", GRIG, "-n", "3"], capsys)
    assert code == 0
    assert "order 128" in out
    assert "39/128" in out


def test_subindep_clean(capsys):
    code, out, _ = run(["subindep", GRIG, "-n", "1", "-m", "2"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "0 violations / 32 triples (32 nonempty)"


def test_martingale_pass(capsys):
    code, out, _ = run(["martingale", GRIG, "-n", "1", "-m", "2", "-r", "2"],
                       capsys)
    assert code == 0
    assert "p = 19/64" in out and "bound holds" in out


def test_martingale_diagnosed_failure_exits_zero(capsys):
    code, out, _ = run(["martingale", ODO, "-n", "1", "-m", "1", "-r", "0"],
                       capsys)
    assert code == 0
    assert "hypothesis not met" in out


def test_fpp_text(capsys):
    code, out, _ = run(["fpp", ODO, "--max-level", "4"], capsys)
    assert code == 0
    assert "level 4: mu(fixes a vertex) = 1/16" in out
    assert "nonincreasing: yes" in out


def test_vssf_passes(capsys):
    code, out, _ = run(["vssf", ODO, "--max-n", "2", "--max-m", "2"], capsys)
    assert code == 0
    assert "passes: yes" in out


def test_vssf_sound_failure_exits_one(tmp_path, capsys):
    p = tmp_path / "swap.ssg"
    p.write_text("alphabet 2\na = (0 1) (1, 1)\n")
    code, out, _ = run(["vssf", str(p), "--max-n", "2", "--max-m", "1"],
                       capsys)
    assert code == 1
    assert "failures" in out


def test_prop4_verdicts(capsys):
    for path, want_code, needle in [
        (ODO, 0, "Holds"),
        (BAS, 0, "Holds"),
        (GRIG, 1, "Fails(kneading)"),
        (VIOL, 1, "Fails(2)"),
    ]:
        code, out, _ = run(["prop4", path], capsys)
        assert code == want_code
        assert out.splitlines()[0].startswith(needle)


def test_prop4_violator_names_witness(capsys):
    _, out, _ = run(["prop4", VIOL], capsys)
    assert "generator b has section a at letter 0" in out


# -- diagnostics and exit codes 2 / 3 -------------------------------------------

def test_missing_file_exits_two(capsys):
    code, out, err = run(["nucleus", "/no/such/file.ssg"], capsys)
    assert code == 2
    assert out == ""
    assert "ssgtree:" in err


def test_parse_error_positions(tmp_path, capsys):
    p = tmp_path / "bad.ssg"
    p.write_text("alphabet 2\na = (0 1) (1, z)\n")
    code, out, err = run(["nucleus", str(p)], capsys)
    assert code == 2
    assert out == ""
    assert "unknown state 'z'" in err
    assert "line 2" in err


def test_bad_seed_exits_two(capsys):
    code, _, err = run(["fpp", ODO, "--max-level", "2", "--seed", "-1"],
                       capsys)
    assert code == 2
    assert "64-bit" in err


def test_bad_element_exits_two(capsys):
    code, _, err = run(["ends", ODO, "--element", "zz"], capsys)
    assert code == 2
    assert "unknown state" in err


def test_budget_flag_exits_three(capsys):
    code, _, err = run(["quotient", GRIG, "-n", "5",
                        "--budget-quotient-elements", "1000"], capsys)
    assert code == 3
    assert "budget exceeded" in err


def test_fpp_truncated_reach(capsys):
    code, out, err = run(["fpp", GRIG, "--max-level", "6",
                          "--budget-quotient-elements", "5000"], capsys)
    assert code == 3
    assert "level 4" in out
    assert "reaches level 4" in err


def test_argparse_rejects_unknown_command():
    with pytest.raises(SystemExit) as ei:
        cli.main(["frobnicate"])
    assert ei.value.code == 2


# -- json mode -------------------------------------------------------------------

ALL_JSON_COMMANDS = [
    ["nucleus", GRIG],
    ["ends", ODO, "--element", "a^2"],
    ["ends", FIN, "--element", "s"],
    ["ends", BAS, "--element", "b"],
    ["dichotomy", ODO, "--word-len", "3"],
    ["dichotomy", FIN, "--word-len", "2"],
    ["quotient", TRIV, "-n", "2"],
    ["subindep", BAS, "-n", "1", "-m", "1"],
    ["martingale", GRIG, "-n", "1", "-m", "2", "-r", "2"],
    ["martingale", ODO, "-n", "1", "-m", "1", "-r", "0"],
    ["fpp", GRIG, "--max-level", "3", "--samples", "300", "--seed", "5"],
    ["vssf", ODO, "--max-n", "2", "--max-m", "2"],
    ["prop4", ODO],
    ["prop4", BAS],
    ["prop4", GRIG],
    ["prop4", VIOL],
    ["search", "--alphabet", "2", "--states", "1"],
]


@pytest.mark.parametrize("argv", ALL_JSON_COMMANDS,
                         ids=lambda a: " ".join(Path(x).stem for x in a))
def test_json_validates_against_schema(argv, validator, capsys):
    _, out, _ = run(argv + ["--json"], capsys)
    assert out.endswith("\n") and out.count("\n") == 1
    doc = json.loads(out)
    validator.validate(doc)
    assert doc["schema"] == "ssgtree-cli/1"
    assert doc["command"] == argv[0]
    if argv[0] == "search":
        assert doc["automaton"] is None
    else:
        assert isinstance(doc["automaton"], str)
        assert len(doc["automaton"]) == 16


def test_json_carries_the_verdict(capsys):
    _, out, _ = run(["prop4", VIOL, "--json"], capsys)
    doc = json.loads(out)
    assert doc["result"]["verdict"] == "fails"
    assert doc["result"]["failed_condition"] == "2"
    assert doc["result"]["cond2"]["witnesses"]


def test_json_fractions_are_exact_strings(capsys):
    _, out, _ = run(["martingale", GRIG, "-n", "1", "-m", "2", "-r", "2",
                     "--json"], capsys)
    doc = json.loads(out)
    assert doc["result"]["p"] == "19/64"
    assert doc["result"]["epsilon"] == "1/8"


def test_json_search_rows_parse(capsys):
    _, out, _ = run(["search", "--alphabet", "2", "--states", "1", "--json"],
                    capsys)
    doc = json.loads(out)
    assert doc["result"]["rows_emitted"] == 7
    kneading = [r for r in doc["result"]["rows"] if r["kneading"]]
    assert len(kneading) == 1
    assert kneading[0]["cond1"] is True and kneading[0]["cond2"] is True


def test_repeated_seeded_runs_byte_identical():
    argv = [sys.executable, "-m", "ssgtree.cli", "fpp", GRIG,
            "--max-level", "3", "--samples", "400", "--seed", "42", "--json"]
    a = subprocess.run(argv, capture_output=True)
    b = subprocess.run(argv, capture_output=True)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout
    assert a.stdout.endswith(b"\n")


def test_different_seed_changes_samples(capsys):
    _, out1, _ = run(["fpp", GRIG, "--max-level", "2", "--samples", "400",
                      "--seed", "1", "--json"], capsys)
    _, out2, _ = run(["fpp", GRIG, "--max-level", "2", "--samples", "400",
                      "--seed", "2", "--json"], capsys)
    d1, d2 = json.loads(out1), json.loads(out2)
    assert d1["result"]["exact"] == d2["result"]["exact"]
    assert d1["result"]["sampled"] != d2["result"]["sampled"]


# -- caching and search persistence ---------------------------------------------

@pytest.fixture
def fresh_memory_cache(monkeypatch):
    # the process-wide quotient cache would satisfy the lookup before the
    # disk store runs; give these tests an empty one
    from ssgtree import quotient
    monkeypatch.setattr(quotient, "_memory_cache", {})


def test_cache_dir_flag_writes_quotients(tmp_path, capsys, fresh_memory_cache):
    cache = tmp_path / "cache"
    code, _, _ = run(["quotient", GRIG, "-n", "4",
                      "--cache-dir", str(cache)], capsys)
    assert code == 0
    assert list(cache.glob("*-n4.ssgq"))


def test_cache_env_var(tmp_path, capsys, monkeypatch, fresh_memory_cache):
    cache = tmp_path / "envcache"
    monkeypatch.setenv("SSGTREE_CACHE_DIR", str(cache))
    code, _, _ = run(["quotient", BAS, "-n", "3"], capsys)
    assert code == 0
    assert list(cache.glob("*-n3.ssgq"))


def test_cache_flag_wins_over_env(tmp_path, capsys, monkeypatch,
                                  fresh_memory_cache):
    monkeypatch.setenv("SSGTREE_CACHE_DIR", str(tmp_path / "loser"))
    winner = tmp_path / "winner"
    run(["quotient", ODO, "-n", "3", "--cache-dir", str(winner)], capsys)
    assert list(winner.glob("*.ssgq"))
    assert not (tmp_path / "loser").exists()


def test_search_out_and_resume(tmp_path, capsys):
    single = tmp_path / "single.jsonl"
    code, _, _ = run(["search", "--alphabet", "2", "--states", "1",
                      "--out", str(single)], capsys)
    assert code == 0

    resumed = tmp_path / "resumed.jsonl"
    ck = tmp_path / "ck"
    code, _, err = run(["search", "--alphabet", "2", "--states", "1",
                        "--out", str(resumed), "--checkpoint", str(ck),
                        "--budget-search-rows", "3"], capsys)
    assert code == 3
    assert "resume" in err
    code, _, _ = run(["search", "--alphabet", "2", "--states", "1",
                      "--out", str(resumed), "--checkpoint", str(ck)], capsys)
    assert code == 0
    assert resumed.read_bytes() == single.read_bytes()


def test_search_checkpoint_mismatch_exits_two(tmp_path, capsys):
    ck = tmp_path / "ck"
    run(["search", "--alphabet", "2", "--states", "1",
         "--out", str(tmp_path / "a.jsonl"), "--checkpoint", str(ck)], capsys)
    code, _, err = run(["search", "--alphabet", "3", "--states", "1",
                        "--out", str(tmp_path / "b.jsonl"),
                        "--checkpoint", str(ck)], capsys)
    assert code == 2
    assert "different search arguments" in err
