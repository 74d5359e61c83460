"""CLI surface: parser, pipeline specs, reports, and exit codes."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from latfx import ConfigError, Strategy
from latfx.cli import ParseError, parse_pipeline, parse_program, run_source
from latfx.lang import Add, AppE, AbsE, Num, SeqE, PutE, VarE, GetE

REPO = Path(__file__).resolve().parent.parent
PROGRAMS = REPO / "programs"


def latfx(*args):
    return subprocess.run(
        [sys.executable, "-m", "latfx", *args],
        capture_output=True,
        text=True,
    )


def run_file(name, pipeline, strategy="cbv"):
    return latfx(
        "run", str(PROGRAMS / name), "--pipeline", pipeline, "--strategy", strategy
    )


# -- parser -------------------------------------------------------------------


def test_parse_add():
    assert parse_program("(+ (num 1) (num 2))") == Add(Num(1), Num(2))


def test_parse_prog_file():
    source = (PROGRAMS / "prog.sexp").read_text()
    ast = parse_program(source)
    assert ast == SeqE(
        PutE(Num(1)),
        AppE(AbsE(Add(VarE(0), GetE())), SeqE(PutE(Num(2)), Num(3))),
    )


def test_parse_seq_right_folds():
    ast = parse_program("(seq (num 1) (num 2) (num 3))")
    assert ast == SeqE(Num(1), SeqE(Num(2), Num(3)))


def test_parse_unbalanced_raises():
    with pytest.raises(ParseError):
        parse_program("(+ (num 1)")


def test_parse_error_carries_position():
    try:
        parse_program("(num\n  oops)")
    except ParseError as exc:
        assert (exc.line, exc.column) == (1, 2)
    else:  # pragma: no cover
        pytest.fail("expected a parse error")


def test_parse_string_escapes():
    from latfx.lang import PrintE

    assert parse_program(r'(print "a\"b\\c\nd")') == PrintE('a"b\\c\nd')


# -- pipeline spec ------------------------------------------------------------


def test_parse_pipeline_names_and_params():
    specs = parse_pipeline("mut=3,abs-cs,plus,end")
    assert [s.name for s in specs] == ["mut", "abs-cs", "plus", "end"]


def test_parse_pipeline_rejects_unknown():
    with pytest.raises(ConfigError):
        parse_pipeline("mut=0,warp,end")


def test_pipeline_requires_trailing_end():
    with pytest.raises(ConfigError):
        run_source("(num 1)", "plus", Strategy.CBV)


# -- end-to-end runs ----------------------------------------------------------


def test_prog_call_site_is_5():
    result = run_file("prog.sexp", "mut=0,abs-cs,plus,end")
    assert result.returncode == 0, result.stderr
    report = json.loads(result.stdout)
    assert report["value"] == 5


def test_prog_definition_site_is_4():
    report = json.loads(run_file("prog.sexp", "mut=0,abs-ds,plus,end").stdout)
    assert report["value"] == 4


def test_lazy_program_need_vs_eager():
    lazy = json.loads(
        run_file("lazy.sexp", "mut=0,read,suspend,thunk,plus,end", "need").stdout
    )
    eager = json.loads(
        run_file("lazy.sexp", "mut=0,read,suspend,eager,plus,end", "need").stdout
    )
    assert lazy["value"] == 0
    assert eager["value"] == 42


def test_stage1_print_order_depends_on_pipeline():
    after = json.loads(
        run_file("stage1.sexp", "suspend,read-staged,print,plus,end").stdout
    )
    before = json.loads(
        run_file("stage1.sexp", "print,suspend,read-staged,plus,end").stdout
    )
    assert (after["value"], after["prints"]) == (3, ["foo", "bar"])
    assert (before["value"], before["prints"]) == (3, ["bar", "foo"])


def test_puzzle_run_is_13():
    report = json.loads(run_file("puzzle_run.sexp", "suspend,read-staged,plus,end").stdout)
    assert report["value"] == 13


def test_puzzle_yields_a_code_value():
    report = json.loads(run_file("puzzle.sexp", "suspend,read-staged,plus,end").stdout)
    assert "code" in report["value"]


def test_probe_need_vs_cbn_logs():
    need = json.loads(
        run_file("probe.sexp", "suspend,read,thunk,plus,print,end", "need").stdout
    )
    cbn = json.loads(
        run_file("probe.sexp", "suspend,read,plus,print,end", "cbn").stdout
    )
    assert (need["value"], need["prints"]) == (4, ["x"])
    assert (cbn["value"], cbn["prints"]) == (4, ["x", "x"])


def test_reports_are_deterministic():
    a = run_file("stage1.sexp", "suspend,read-staged,print,plus,end")
    b = run_file("stage1.sexp", "suspend,read-staged,print,plus,end")
    assert a.stdout == b.stdout
    assert a.returncode == b.returncode == 0


def test_semantic_error_exits_1_with_message():
    result = run_file("prog.sexp", "mut=0,abs-cs,end")  # no plus handler
    assert result.returncode == 1
    report = json.loads(result.stdout)
    assert report["error"].startswith("unhandled operation: Adding.")


def test_parse_error_exits_2(tmp_path):
    bad = tmp_path / "bad.sexp"
    bad.write_text("(+ (num 1)")
    result = latfx("run", str(bad), "--pipeline", "plus,end")
    assert result.returncode == 2
    assert "unbalanced" in result.stderr


def test_unknown_handler_exits_2():
    result = run_file("prog.sexp", "mut=0,warp,end")
    assert result.returncode == 2
    assert "unknown handler" in result.stderr


def test_missing_file_exits_2(tmp_path):
    result = latfx("run", str(tmp_path / "nope.sexp"), "--pipeline", "plus,end")
    assert result.returncode == 2


def test_exit_code_matches_error_field():
    ok = run_file("prog.sexp", "mut=0,abs-cs,plus,end")
    assert ok.returncode == 0 and "error" not in json.loads(ok.stdout)
    bad = run_file("prog.sexp", "mut=0,abs-cs,end")
    assert bad.returncode == 1 and "error" in json.loads(bad.stdout)


def test_application_error_exits_1(tmp_path):
    bad = tmp_path / "apperr.sexp"
    bad.write_text("(app (num 1) (num 2))")
    result = latfx("run", str(bad), "--pipeline", "abs-cs,plus,end")
    assert result.returncode == 1
    assert json.loads(result.stdout)["error"] == "application error"


def test_quote_error_exits_1(tmp_path):
    bad = tmp_path / "hole.sexp"
    bad.write_text("(push 1 (var 0))")
    result = latfx("run", str(bad), "--pipeline", "suspend,read-staged,end")
    assert result.returncode == 1
    assert json.loads(result.stdout)["error"] == "quote error"


def test_diverging_program_reports_cleanly(monkeypatch):
    import latfx.effects as effects_module

    monkeypatch.setattr(effects_module, "_WORKER_RECURSION_LIMIT", 4000)
    source = "(app (lam (app (var 0) (var 0))) (lam (app (var 0) (var 0))))"
    report = run_source(source, "abs-cs,plus,end", Strategy.CBV)
    assert "recursion limit" in report["error"]
