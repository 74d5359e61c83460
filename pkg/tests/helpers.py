"""Shared test helpers: pipeline shorthand and seeded program generators."""

from __future__ import annotations

import random
from typing import Callable, List, Tuple

from latfx import (
    EffectTree,
    HardError,
    IntV,
    LCAbs,
    LCApp,
    LCReturn,
    LCVar,
    Node,
    Value,
    abs_,
    app,
    get,
    map_core,
    nat,
    plus,
    print_,
    pure,
    put,
    run_pipeline,
    then,
    var,
)
from latfx.cli import parse_pipeline


def pipe(spec):
    return parse_pipeline(spec) if isinstance(spec, str) else list(spec)


def run(tree: EffectTree, spec):
    outcome = run_pipeline(tree, pipe(spec))
    return outcome.inspection(), outcome.prints


def observe(tree: EffectTree, spec: str):
    """Everything a run exposes: core value, state layers, print log."""
    inspection, prints = run(tree, spec)
    return inspection.core, inspection.failed, inspection.states, tuple(prints)


def spine_ops(tree: EffectTree, feed: Value = IntV(0)) -> List[tuple]:
    """Operation tags along the continuation spine, feeding a dummy value."""
    ops = []
    while isinstance(tree, Node):
        ops.append((tree.op.effect, tree.op.name))
        tree = tree.cont(map_core(tree.ctx, feed))
    return ops


# ---------------------------------------------------------------------------
# Random programs over {Mutating, Adding} (optionally Printing), written as
# step lists so the same seed always builds the same tree.


def _step(rng: random.Random, with_print: bool) -> Callable[[Value], EffectTree]:
    kinds = ["get", "put", "nat", "plus", "add_get"]
    if with_print:
        kinds.append("print")
    kind = rng.choice(kinds)
    k = rng.randrange(10)
    if kind == "get":
        return lambda v: get()
    if kind == "put":
        return lambda v: then(put(IntV(k)), lambda _u: pure(v))
    if kind == "nat":
        return lambda v: nat(k)
    if kind == "plus":
        return lambda v: plus(v, IntV(k)) if isinstance(v, IntV) else nat(k)
    if kind == "add_get":
        return lambda v: then(
            get(),
            lambda s: plus(v, s) if isinstance(v, IntV) and isinstance(s, IntV) else pure(s),
        )
    return lambda v: print_(f"p{k}")


def gen_steps(rng: random.Random, size: int, with_print: bool = False):
    return [_step(rng, with_print) for _ in range(size)]


def steps_to_fn(steps) -> Callable[[Value], EffectTree]:
    def go(index: int, value: Value) -> EffectTree:
        if index == len(steps):
            return pure(value)
        return then(steps[index](value), lambda v2: go(index + 1, v2))

    return lambda value: go(0, value)


def gen_state_tree(rng: random.Random, size: int, with_print: bool = False) -> EffectTree:
    return steps_to_fn(gen_steps(rng, size, with_print))(IntV(rng.randrange(10)))


def gen_state_fn(rng: random.Random, size: int) -> Callable[[Value], EffectTree]:
    return steps_to_fn(gen_steps(rng, size))


# ---------------------------------------------------------------------------
# Random closed de Bruijn terms over {abs, app, var, int literal}, plus the
# two denotations used by the differential suite.


def gen_term(rng: random.Random, depth: int, binders: int):
    choices = ["lit"]
    if binders > 0:
        choices += ["var", "var"]
    if depth > 0:
        choices += ["abs", "abs", "app", "app"]
    kind = rng.choice(choices)
    if kind == "lit":
        return ("lit", rng.randrange(100))
    if kind == "var":
        return ("var", rng.randrange(binders))
    if kind == "abs":
        return ("abs", gen_term(rng, depth - 1, binders + 1))
    return (
        "app",
        gen_term(rng, depth - 1, binders),
        gen_term(rng, depth - 1, binders),
    )


def term_to_tree(term) -> EffectTree:
    if term[0] == "lit":
        return pure(IntV(term[1]))
    if term[0] == "var":
        return var(term[1])
    if term[0] == "abs":
        return abs_(term_to_tree(term[1]))
    fun, arg = term[1], term[2]
    return then(
        term_to_tree(fun),
        lambda vf: then(term_to_tree(arg), lambda va: app(vf, va)),
    )


def term_to_lc(term, cont=LCReturn):
    if term[0] == "lit":
        return cont(IntV(term[1]))
    if term[0] == "var":
        return LCVar(term[1], cont)
    if term[0] == "abs":
        return LCAbs(term_to_lc(term[1], LCReturn), cont)
    fun, arg = term[1], term[2]
    return term_to_lc(
        fun, lambda vf: term_to_lc(arg, lambda va: LCApp(vf, va, cont))
    )


def run_to_result(thunk: Callable[[], object]) -> Tuple[str, object]:
    """Run and normalize: ('ok', value), ('error', message) or ('diverged',).

    Generated closed terms can encode self-application, on which every
    faithful interpreter loops; the recursion limit turns that into an
    observable outcome both sides of a differential test must share.
    """
    try:
        return "ok", thunk()
    except HardError as exc:
        return "error", str(exc)
    except RecursionError:
        return ("diverged",)
