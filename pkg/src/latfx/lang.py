"""Modular surface syntax and its fold into effect trees.

Each language feature is a handful of AST constructors plus a feature
algebra mapping them onto effect operations.  ``compose_features`` glues
algebras into one dispatcher (each constructor claimed exactly once) and
``denote`` folds an AST bottom-up through it.

The lambda/let binder discipline is chosen per run: plain call-by-value
abstraction, the call-by-need or call-by-name bundles, or the staged bundle
when the pipeline reads a staged environment.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
from typing import Callable, Dict, Iterable, Sequence

from .core import EffectTree, then
from .effects import (
    ConfigError,
    abs_,
    app,
    get,
    nat,
    plus,
    print_,
    put,
    var,
)
from . import lam, staging


class AstNode:
    pass


@dataclass(frozen=True)
class Num(AstNode):
    value: int


@dataclass(frozen=True)
class Add(AstNode):
    left: AstNode
    right: AstNode


@dataclass(frozen=True)
class VarE(AstNode):
    index: int


@dataclass(frozen=True)
class AbsE(AstNode):
    body: AstNode


@dataclass(frozen=True)
class AppE(AstNode):
    fun: AstNode
    arg: AstNode


@dataclass(frozen=True)
class LetE(AstNode):
    # The first field is the body (abstracted over index 0), the second the
    # bound expression, mirroring the let algebra's argument order.
    body: AstNode
    bound: AstNode


@dataclass(frozen=True)
class SeqE(AstNode):
    first: AstNode
    second: AstNode


@dataclass(frozen=True)
class LetVarE(AstNode):
    index: int


@dataclass(frozen=True)
class PrintE(AstNode):
    text: str


@dataclass(frozen=True)
class QuoteE(AstNode):
    code: AstNode


@dataclass(frozen=True)
class UnquoteE(AstNode):
    code: AstNode


@dataclass(frozen=True)
class SpliceE(AstNode):
    code: AstNode


@dataclass(frozen=True)
class PushE(AstNode):
    count: int
    code: AstNode


@dataclass(frozen=True)
class GetE(AstNode):
    pass


@dataclass(frozen=True)
class PutE(AstNode):
    expr: AstNode


class Strategy(Enum):
    CBV = "cbv"
    CBN = "cbn"
    NEED = "need"


@dataclass(frozen=True)
class FeatureAlgebra:
    """One feature's constructors mapped onto trees.

    Each case takes the AST node and the already-denoted child trees.
    """

    name: str
    cases: dict


def compose_features(algebras: Iterable[FeatureAlgebra]) -> Dict[type, Callable]:
    table: Dict[type, Callable] = {}
    for algebra in algebras:
        for tag, fn in algebra.cases.items():
            if tag in table:
                raise ConfigError(f"duplicate constructor claim: {tag.__name__}")
            table[tag] = fn
    return table


def denote_with(table: Dict[type, Callable], ast: AstNode) -> EffectTree:
    fn = table.get(type(ast))
    if fn is None:
        raise ConfigError(f"no feature algebra claims {type(ast).__name__}")
    children = [
        denote_with(table, child)
        for field in fields(ast)
        for child in [getattr(ast, field.name)]
        if isinstance(child, AstNode)
    ]
    return fn(ast, *children)


def _cbv_abs(body: EffectTree) -> EffectTree:
    return abs_(body)


def _cbv_app(fun: EffectTree, arg: EffectTree) -> EffectTree:
    return then(fun, lambda v1: then(arg, lambda v2: app(v1, v2)))


def _bundle(strategy: Strategy, staged: bool):
    if staged:
        return staging.abs_staged, staging.app_staged, staging.var_staged
    if strategy is Strategy.NEED:
        return lam.abs_lazy, lam.app_lazy, lam.var_lazy
    if strategy is Strategy.CBN:
        return lam.abs_cbn, lam.app_cbn, lam.var_cbn
    return _cbv_abs, _cbv_app, var


arith_algebra = FeatureAlgebra(
    "arith",
    {
        Num: lambda node: nat(node.value),
        Add: lambda node, left, right: then(
            left, lambda a: then(right, lambda b: plus(a, b))
        ),
    },
)

print_algebra = FeatureAlgebra(
    "print", {PrintE: lambda node: print_(node.text)}
)

stage_algebra = FeatureAlgebra(
    "stage",
    {
        QuoteE: lambda node, code: staging.quote(code),
        UnquoteE: lambda node, code: staging.unquote(code),
        SpliceE: lambda node, code: staging.splice(code),
        PushE: lambda node, code: staging.push(node.count, code),
    },
)

state_algebra = FeatureAlgebra(
    "state",
    {
        GetE: lambda node: get(),
        PutE: lambda node, expr: then(expr, put),
    },
)


def lam_algebra(strategy: Strategy, staged: bool = False) -> FeatureAlgebra:
    absf, appf, varf = _bundle(strategy, staged)
    return FeatureAlgebra(
        "lam",
        {
            VarE: lambda node: varf(node.index),
            AbsE: lambda node, body: absf(body),
            AppE: lambda node, fun, arg: appf(fun, arg),
        },
    )


def let_algebra(strategy: Strategy, staged: bool = False) -> FeatureAlgebra:
    # Let is the same binder as lambda: abstract the body, evaluate the bound
    # expression, apply.  Let-bound variables therefore share var's indexing.
    absf, appf, varf = _bundle(strategy, staged)
    return FeatureAlgebra(
        "let",
        {
            LetE: lambda node, body, bound: appf(absf(body), bound),
            SeqE: lambda node, first, second: then(first, lambda _v: second),
            LetVarE: lambda node: varf(node.index),
        },
    )


def feature_set(strategy: Strategy, staged: bool = False) -> Sequence[FeatureAlgebra]:
    return (
        arith_algebra,
        lam_algebra(strategy, staged),
        let_algebra(strategy, staged),
        print_algebra,
        stage_algebra,
        state_algebra,
    )


def denote(ast: AstNode, strategy: Strategy = Strategy.CBV, staged: bool = False) -> EffectTree:
    """Fold an AST into an effect tree under the chosen binder discipline."""
    return denote_with(compose_features(feature_set(strategy, staged)), ast)
