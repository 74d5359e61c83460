"""Batch front-end: parse an s-expression program, run a pipeline, report.

Exit codes: 0 for a clean run, 1 for a semantic error during evaluation,
2 for parse or configuration errors.  The report is a single JSON line on
stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .core import (
    AbsStore,
    Bound,
    ClosV,
    EagerStore,
    Forward,
    HandlerState,
    HardError,
    Hole,
    Inspection,
    IntV,
    MutState,
    PlainEnv,
    StagedEnv,
    StrV,
    SuspStore,
    SuspV,
    ThunkRefV,
    ThunkStore,
    UnitV,
    Value,
)
from .effects import (
    ConfigError,
    HANDLER_NAMES,
    HandlerSpec,
    run_pipeline,
)
from .lang import (
    AbsE,
    Add,
    AppE,
    AstNode,
    GetE,
    LetE,
    LetVarE,
    Num,
    PrintE,
    PushE,
    PutE,
    QuoteE,
    SeqE,
    SpliceE,
    Strategy,
    UnquoteE,
    VarE,
    denote,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


# --------------------------------------------------------------------------
# S-expression reader


@dataclass(frozen=True)
class Token:
    kind: str  # "(", ")", "int", "string", "symbol"
    text: str
    line: int
    column: int


def _tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch == ";":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch in "()":
            tokens.append(Token(ch, ch, line, col))
            col += 1
            i += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            text = []
            while True:
                if i >= n:
                    raise ParseError("unterminated string", start_line, start_col)
                ch = source[i]
                if ch == "\n":
                    raise ParseError("unterminated string", start_line, start_col)
                if ch == "\\":
                    if i + 1 >= n:
                        raise ParseError("unterminated string", start_line, start_col)
                    escape = source[i + 1]
                    if escape == "n":
                        text.append("\n")
                    elif escape in ('"', "\\"):
                        text.append(escape)
                    else:
                        raise ParseError(f"bad escape: \\{escape}", line, col)
                    i += 2
                    col += 2
                    continue
                if ch == '"':
                    i += 1
                    col += 1
                    break
                text.append(ch)
                i += 1
                col += 1
            tokens.append(Token("string", "".join(text), start_line, start_col))
            continue
        start_line, start_col = line, col
        j = i
        while j < n and not source[j].isspace() and source[j] not in '();"':
            j += 1
        word = source[i:j]
        col += j - i
        i = j
        body = word[1:] if word[:1] == "-" else word
        kind = "int" if body.isdigit() and body else "symbol"
        tokens.append(Token(kind, word, start_line, start_col))
    return tokens


def _read_form(tokens: List[Token], pos: int):
    if pos >= len(tokens):
        last = tokens[-1] if tokens else Token("", "", 1, 1)
        raise ParseError("unexpected end of input", last.line, last.column)
    tok = tokens[pos]
    if tok.kind == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise ParseError("unbalanced '('", tok.line, tok.column)
            if tokens[pos].kind == ")":
                return items, tok, pos + 1
            item, _, pos = _read_form(tokens, pos)
            items.append(item)
    if tok.kind == ")":
        raise ParseError("unbalanced ')'", tok.line, tok.column)
    return tok, tok, pos + 1


def _expect_int(item, where: Token) -> int:
    if isinstance(item, Token) and item.kind == "int":
        return int(item.text)
    raise ParseError("expected an integer literal", where.line, where.column)


def _expect_string(item, where: Token) -> str:
    if isinstance(item, Token) and item.kind == "string":
        return item.text
    raise ParseError("expected a string literal", where.line, where.column)


_FORM_ARITY = {
    "num": 1,
    "+": 2,
    "lam": 1,
    "var": 1,
    "app": 2,
    "let": 2,
    "letvar": 1,
    "get": 0,
    "put": 1,
    "print": 1,
    "quote": 1,
    "unquote": 1,
    "splice": 1,
    "push": 2,
}


def _build(form, where: Token) -> AstNode:
    if isinstance(form, Token):
        raise ParseError(f"expected a form, got '{form.text}'", form.line, form.column)
    if not form or not isinstance(form[0], Token) or form[0].kind != "symbol":
        raise ParseError("expected a form keyword", where.line, where.column)
    head = form[0]
    name = head.text
    args = form[1:]
    if name == "seq":
        if len(args) < 2:
            raise ParseError("seq needs at least two expressions", head.line, head.column)
        built = [_build(a, head) for a in args]
        result = built[-1]
        for expr in reversed(built[:-1]):
            result = SeqE(expr, result)
        return result
    if name not in _FORM_ARITY:
        raise ParseError(f"unknown form: {name}", head.line, head.column)
    if len(args) != _FORM_ARITY[name]:
        raise ParseError(
            f"{name} takes {_FORM_ARITY[name]} argument(s), got {len(args)}",
            head.line,
            head.column,
        )
    if name == "num":
        return Num(_expect_int(args[0], head))
    if name == "+":
        return Add(_build(args[0], head), _build(args[1], head))
    if name == "lam":
        return AbsE(_build(args[0], head))
    if name == "var":
        return VarE(_expect_int(args[0], head))
    if name == "app":
        return AppE(_build(args[0], head), _build(args[1], head))
    if name == "let":
        return LetE(_build(args[0], head), _build(args[1], head))
    if name == "letvar":
        return LetVarE(_expect_int(args[0], head))
    if name == "get":
        return GetE()
    if name == "put":
        return PutE(_build(args[0], head))
    if name == "print":
        return PrintE(_expect_string(args[0], head))
    if name == "quote":
        return QuoteE(_build(args[0], head))
    if name == "unquote":
        return UnquoteE(_build(args[0], head))
    if name == "splice":
        return SpliceE(_build(args[0], head))
    if name == "push":
        count = _expect_int(args[0], head)
        if count < 0:
            raise ParseError("push count must be non-negative", head.line, head.column)
        return PushE(count, _build(args[1], head))
    raise ParseError(f"unknown form: {name}", head.line, head.column)


def parse_program(source: str) -> AstNode:
    tokens = _tokenize(source)
    if not tokens:
        raise ParseError("empty program", 1, 1)
    form, where, pos = _read_form(tokens, 0)
    if pos != len(tokens):
        extra = tokens[pos]
        raise ParseError("trailing input after program", extra.line, extra.column)
    return _build(form, where)


# --------------------------------------------------------------------------
# Pipeline spec


def parse_pipeline(spec: str) -> List[HandlerSpec]:
    parts = [p.strip() for p in spec.split(",")]
    if any(not p for p in parts):
        raise ConfigError("empty handler name in pipeline spec")
    out: List[HandlerSpec] = []
    for part in parts:
        if part.startswith("mut="):
            try:
                initial = int(part[4:])
            except ValueError:
                raise ConfigError(f"bad initial state: {part!r}") from None
            out.append(HandlerSpec("mut", (IntV(initial),)))
            continue
        if part == "mut":
            raise ConfigError("mut needs an initial state: mut=<int>")
        if part not in HANDLER_NAMES:
            raise ConfigError(f"unknown handler: {part!r}")
        if part == "read":
            out.append(HandlerSpec("read", (PlainEnv(),)))
        elif part == "read-staged":
            out.append(HandlerSpec("read-staged", (StagedEnv(),)))
        elif part in ("abs-cs", "abs-ds"):
            out.append(HandlerSpec(part, (PlainEnv(), ())))
        elif part in ("suspend", "thunk", "eager"):
            out.append(HandlerSpec(part, ((),)))
        else:
            out.append(HandlerSpec(part))
    return out


# --------------------------------------------------------------------------
# Report rendering


def render_value(value: Value):
    if isinstance(value, IntV):
        return value.value
    if isinstance(value, StrV):
        return value.value
    if isinstance(value, UnitV):
        return None
    if isinstance(value, ClosV):
        return {"closure": value.index}
    if isinstance(value, SuspV):
        return {"code": value.index}
    if isinstance(value, ThunkRefV):
        return {"thunk": value.index}
    if isinstance(value, PlainEnv):
        return {"env": [render_value(v) for v in value.values]}
    if isinstance(value, StagedEnv):
        return {"env": [_render_slot(s) for s in value.slots]}
    return {"value": repr(value)}


def _render_slot(slot):
    if isinstance(slot, Hole):
        return "_"
    if isinstance(slot, Forward):
        return {"forward": slot.offset}
    assert isinstance(slot, Bound)
    return render_value(slot.value)


def render_state(state: HandlerState):
    if isinstance(state, MutState):
        return render_value(state.value)
    if isinstance(state, AbsStore):
        return {"resumptions": len(state.resumptions)}
    if isinstance(state, SuspStore):
        return {"suspensions": len(state.suspensions)}
    if isinstance(state, ThunkStore):
        return {"thunks": len(state.slots)}
    assert isinstance(state, EagerStore)
    return {"values": [render_value(v) for v in state.values]}


def build_report(inspection: Inspection, prints: Sequence[str]) -> dict:
    report: dict = {}
    if inspection.failed is not None:
        report["error"] = f"uncaught error: {json.dumps(render_value(inspection.failed))}"
    else:
        report["value"] = render_value(inspection.core)
    report["prints"] = list(prints)
    report["states"] = [render_state(s) for s in inspection.states]
    return report


# --------------------------------------------------------------------------
# Entry point


def run_source(source: str, pipeline: str, strategy: Strategy) -> dict:
    ast = parse_program(source)
    specs = parse_pipeline(pipeline)
    staged = any(s.name == "read-staged" for s in specs)
    tree = denote(ast, strategy, staged=staged)
    log: List[str] = []
    try:
        outcome = run_pipeline(tree, specs, log)
    except HardError as exc:
        return {"error": str(exc), "prints": list(log)}
    except RecursionError:
        return {"error": "recursion limit exceeded (diverging program?)", "prints": list(log)}
    return build_report(outcome.inspection(), outcome.prints)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="latfx", description="Run effect-tree programs.")
    sub = parser.add_subparsers(dest="command", required=True)
    runner = sub.add_parser("run", help="run one program file through a handler pipeline")
    runner.add_argument("file", help="program file (s-expression syntax)")
    runner.add_argument(
        "--pipeline",
        required=True,
        help="comma-separated handlers, program side first, 'end' last "
        "(e.g. \"mut=0,abs-cs,plus,end\")",
    )
    runner.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy],
        default=Strategy.CBV.value,
        help="evaluation strategy for lambda/let binders (default: cbv)",
    )
    runner.add_argument("--format", choices=["json"], default="json")
    args = parser.parse_args(argv)

    try:
        with open(args.file, "r", encoding="utf-8") as handle:
            source = handle.read()
    except OSError as exc:
        print(f"latfx: {exc}", file=sys.stderr)
        return 2

    try:
        report = run_source(source, args.pipeline, Strategy(args.strategy))
    except ParseError as exc:
        print(f"{args.file}:{exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"latfx: {exc}", file=sys.stderr)
        return 2

    print(json.dumps(report), flush=True)
    return 0 if "error" not in report else 1


if __name__ == "__main__":
    sys.exit(main())
