"""Evaluation-strategy bundles for lambdas, plus a non-modular oracle.

Call-by-need and call-by-name are assembled from the primitive Reading,
Suspending and Thunking effects: abstraction suspends the body, application
defers the argument (memoizing thunk vs. re-run suspension), and variable
lookup forces or re-enacts the deferred argument under its captured
environment.

``oracle_handle_abs`` is the direct, non-modular interpreter of the bare
abstraction operations; the test suite runs it differentially against the
modular call-site handler.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

from .core import (
    ClosV,
    EffectTree,
    HardError,
    PlainEnv,
    SuspV,
    ThunkRefV,
    Value,
    IntV,
    env_lookup,
    env_prepend,
    pure,
    then,
)
from .effects import ask, enact, force, local, suspend, thunk


def _pointer(value: Value) -> int:
    if isinstance(value, IntV):
        return value.value
    raise HardError("bad index")


def _plain(env) -> PlainEnv:
    if isinstance(env, PlainEnv):
        return env
    raise HardError("lazy evaluation requires a plain environment")


# --------------------------------------------------------------------------
# Call-by-need


def abs_lazy(body: EffectTree) -> EffectTree:
    """Suspend the body; the closure pairs its pointer with the current env."""
    return then(
        ask(),
        lambda nv: then(suspend(body), lambda p: pure(ClosV(_pointer(p), nv))),
    )


def var_lazy(index: int) -> EffectTree:
    """Look the variable up; force a thunk reference under its captured env."""

    def dispatch(nv):
        value = env_lookup(_plain(nv), index)
        if isinstance(value, ThunkRefV) and isinstance(value.env, PlainEnv):
            return local(lambda _r: value.env, force(value.index))
        return pure(value)

    return then(ask(), dispatch)


def app_lazy(fun: EffectTree, arg: EffectTree) -> EffectTree:
    """Evaluate the function, thunk the argument, enact the body."""

    def with_fun(vf):
        def with_env(nv):
            def with_ptr(p):
                deferred = ThunkRefV(_pointer(p), nv)
                if isinstance(vf, ClosV):
                    extended = env_prepend(deferred, _plain(vf.env))
                    return local(lambda _r: extended, enact(vf.index))
                raise HardError("application error")

            return then(thunk(arg), with_ptr)

        return then(ask(), with_env)

    return then(fun, with_fun)


# --------------------------------------------------------------------------
# Call-by-name: as above but arguments are plain suspensions, re-run per use.


def abs_cbn(body: EffectTree) -> EffectTree:
    return abs_lazy(body)


def var_cbn(index: int) -> EffectTree:
    def dispatch(nv):
        value = env_lookup(_plain(nv), index)
        if isinstance(value, SuspV) and isinstance(value.env, PlainEnv):
            return local(lambda _r: value.env, enact(value.index))
        return pure(value)

    return then(ask(), dispatch)


def app_cbn(fun: EffectTree, arg: EffectTree) -> EffectTree:
    def with_fun(vf):
        def with_env(nv):
            def with_ptr(p):
                deferred = SuspV(_pointer(p), nv)
                if isinstance(vf, ClosV):
                    extended = env_prepend(deferred, _plain(vf.env))
                    return local(lambda _r: extended, enact(vf.index))
                raise HardError("application error")

            return then(suspend(arg), with_ptr)

        return then(ask(), with_env)

    return then(fun, with_fun)


# --------------------------------------------------------------------------
# Non-modular reference interpreter for the bare abstraction operations.
# Continuations are plain Python functions; values are the shared Value type.


class LC:
    """Monadic syntax tree of the non-modular abstraction language."""


@dataclass(frozen=True)
class LCReturn(LC):
    value: Value


@dataclass(frozen=True)
class LCVar(LC):
    index: int
    cont: Callable


@dataclass(frozen=True)
class LCApp(LC):
    fun: Value
    arg: Value
    cont: Callable


@dataclass(frozen=True)
class LCAbs(LC):
    body: LC
    cont: Callable


def oracle_handle_abs(env, store, t: LC) -> Tuple[tuple, Value]:
    """Directly interpret ``t``; returns the final store and the value."""
    env = tuple(env)
    store = tuple(store)
    while True:
        if isinstance(t, LCReturn):
            return store, t.value
        if isinstance(t, LCVar):
            if not 0 <= t.index < len(env):
                raise HardError("bad index")
            t = t.cont(env[t.index])
            continue
        if isinstance(t, LCApp):
            if not isinstance(t.fun, ClosV):
                raise HardError("application error")
            captured = t.fun.env
            if not isinstance(captured, PlainEnv):
                raise HardError("application error")
            if not 0 <= t.fun.index < len(store):
                raise HardError("bad index")
            store, value = oracle_handle_abs(
                (t.arg,) + captured.values, store, store[t.fun.index]
            )
            t = t.cont(value)
            continue
        assert isinstance(t, LCAbs)
        closure = ClosV(len(store), PlainEnv(env))
        store = store + (t.body,)
        t = t.cont(closure)
