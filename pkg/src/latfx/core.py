"""Latent effect trees: the shared runtime representation.

An effect tree is a free-monad-like structure whose internal nodes carry a
pending operation, the latent context accumulated by the handlers applied so
far, a selector for deferred subcomputations, and a continuation.  Handlers
(module ``effects``) rewrite trees into trees, growing the latent context one
layer per stateful handler; ``h_end`` closes a pipeline and ``inspect`` takes
the decorated result apart.

The higher-kinded encoding this mirrors (signature-indexed operations, a
latent effect functor) is replaced by a first-order one: operations are
tagged ``OpInstance`` records and the functor stack is the recursive
``LatentCtx`` / ``LatentVal`` pair.  Shape guarantees that a type system
would give (layer count and kinds match the applied handler prefix) are
runtime invariants checked by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional


class HardError(RuntimeError):
    """Unrecoverable evaluation error (bad index, projection failure, ...)."""


# --------------------------------------------------------------------------
# Runtime values


class Value:
    """Universal runtime value."""


@dataclass(frozen=True)
class UnitV(Value):
    pass


@dataclass(frozen=True)
class IntV(Value):
    value: int


@dataclass(frozen=True)
class StrV(Value):
    value: str


class Environment(Value):
    """Variable environment.

    Environments are themselves values: ``ask`` hands the current one to its
    continuation, and closures and code values embed the one they captured.
    """


@dataclass(frozen=True)
class PlainEnv(Environment):
    values: tuple = ()


class Slot:
    """One position of a staged environment."""


@dataclass(frozen=True)
class Hole(Slot):
    pass


@dataclass(frozen=True)
class Bound(Slot):
    value: Value


@dataclass(frozen=True)
class Forward(Slot):
    offset: int


@dataclass(frozen=True)
class StagedEnv(Environment):
    slots: tuple = ()


@dataclass(frozen=True)
class ClosV(Value):
    """Closure: an index into a resumption store plus the captured env."""

    index: int
    env: Environment


@dataclass(frozen=True)
class SuspV(Value):
    """Suspended code: an index into a suspension store plus its env."""

    index: int
    env: Environment


@dataclass(frozen=True)
class ThunkRefV(Value):
    """Reference to a memoizing thunk slot plus the env to force it under."""

    index: int
    env: Environment


UNIT = UnitV()


def env_lookup(env: PlainEnv, index: int) -> Value:
    if not isinstance(env, PlainEnv):
        raise HardError("bad index")
    if not 0 <= index < len(env.values):
        raise HardError("bad index")
    return env.values[index]


def env_prepend(value: Value, env: PlainEnv) -> PlainEnv:
    return PlainEnv((value,) + env.values)


# --------------------------------------------------------------------------
# Latent context and decorated results
#
# Each handler that keeps state contributes one layer; the outermost layer
# belongs to the handler applied last.  ``LeftWrap`` (a failure) terminates
# the stack: the failing handler's layer and everything beneath it are gone.


class HandlerState:
    """State payload one handler parks inside a context/result layer."""


@dataclass(frozen=True)
class MutState(HandlerState):
    value: Value


@dataclass(frozen=True)
class AbsStore(HandlerState):
    resumptions: tuple = ()


@dataclass(frozen=True)
class SuspStore(HandlerState):
    suspensions: tuple = ()


@dataclass(frozen=True)
class ThunkStore(HandlerState):
    slots: tuple = ()


@dataclass(frozen=True)
class EagerStore(HandlerState):
    values: tuple = ()


class LatentCtx:
    """The context a node remembers and a deferred computation is re-fed."""


@dataclass(frozen=True)
class CtxId(LatentCtx):
    pass


@dataclass(frozen=True)
class CtxState(LatentCtx):
    payload: HandlerState
    inner: LatentCtx


@dataclass(frozen=True)
class CtxEither(LatentCtx):
    inner: LatentCtx


CTX_ID = CtxId()


class LatentVal:
    """A value decorated with the layers of the handlers applied so far."""


@dataclass(frozen=True)
class Core(LatentVal):
    value: Value


@dataclass(frozen=True)
class StateWrap(LatentVal):
    payload: HandlerState
    inner: LatentVal


@dataclass(frozen=True)
class RightWrap(LatentVal):
    inner: LatentVal


@dataclass(frozen=True)
class LeftWrap(LatentVal):
    """A failure.  ``resume_ctx`` is the throw-site context when the failing
    effect supports resumption (exceptions) and ``None`` when it does not
    (plain errors).  Nothing lives below a LeftWrap."""

    resume_ctx: Optional[LatentCtx]
    failure: Value


# --------------------------------------------------------------------------
# Deferred computations


class Resumption:
    """A stored function body awaiting application."""


@dataclass(frozen=True)
class CallSite(Resumption):
    """Applied to a fresh context at every call site."""

    run: Callable


@dataclass(frozen=True)
class DefSite(Resumption):
    """Already applied to the definition-site context."""

    tree: "EffectTree"


class ThunkSlot:
    pass


@dataclass(frozen=True)
class Unforced(ThunkSlot):
    run: Callable


@dataclass(frozen=True)
class Forced(ThunkSlot):
    value: Value


# --------------------------------------------------------------------------
# The tree


class EffectId(Enum):
    READING = "Reading"
    MUTATING = "Mutating"
    THROWING = "Throwing"
    FAILING = "Failing"
    ADDING = "Adding"
    PRINTING = "Printing"
    SUSPENDING = "Suspending"
    THUNKING = "Thunking"
    ABSTRACTING = "Abstracting"
    ENDING = "Ending"


class Arity(Enum):
    NO_SUB = "NoSub"
    ONE_SUB = "OneSub"
    MAYBE_SUB = "MaybeSub"


class SubKey:
    """Selector key for a node's subcomputations."""


@dataclass(frozen=True)
class OneKey(SubKey):
    pass


@dataclass(frozen=True)
class JustKey(SubKey):
    exc: Value


@dataclass(frozen=True)
class NothingKey(SubKey):
    pass


ONE = OneKey()
NOTHING = NothingKey()


@dataclass(frozen=True)
class OpInstance:
    effect: EffectId
    name: str
    payload: tuple
    arity: Arity

    def __str__(self) -> str:
        return f"{self.effect.value}.{self.name}"


class EffectTree:
    pass


@dataclass(frozen=True)
class Leaf(EffectTree):
    result: LatentVal


@dataclass(frozen=True)
class Node(EffectTree):
    op: OpInstance
    ctx: LatentCtx
    subs: Callable  # (SubKey, LatentCtx) -> EffectTree
    cont: Callable  # LatentVal -> EffectTree


# --------------------------------------------------------------------------
# Monadic structure


def bind(t: EffectTree, f: Callable) -> EffectTree:
    """Graft ``f`` onto the leaf positions of ``t``'s continuation spine.

    ``f`` takes the decorated result of ``t``.  Node operations, contexts
    and subcomputation selectors are left untouched.
    """
    if isinstance(t, Leaf):
        return f(t.result)
    return Node(t.op, t.ctx, t.subs, lambda lv, _k=t.cont: bind(_k(lv), f))


def pure(value: Value) -> EffectTree:
    return Leaf(Core(value))


def core_value(lv: LatentVal) -> Value:
    if not isinstance(lv, Core):
        raise HardError(f"expected an undecorated value, got {type(lv).__name__}")
    return lv.value


def then(t: EffectTree, f: Callable) -> EffectTree:
    """``bind`` for program construction: ``f`` sees the bare value.

    Only valid on not-yet-handled trees, where every continuation is fed an
    undecorated ``Core`` value.
    """
    return bind(t, lambda lv: f(core_value(lv)))


def map_core(layers, replacement: Value) -> LatentVal:
    """Replace the core of a decorated value, keeping the layer stack.

    Also accepts a ``LatentCtx``; that is how a handler builds the value it
    passes to a continuation (the context with its unit core swapped out).
    Failures have no core to replace.
    """
    if isinstance(layers, (CtxId, Core)):
        return Core(replacement)
    if isinstance(layers, CtxState):
        return StateWrap(layers.payload, map_core(layers.inner, replacement))
    if isinstance(layers, StateWrap):
        return StateWrap(layers.payload, map_core(layers.inner, replacement))
    if isinstance(layers, (CtxEither, RightWrap)):
        return RightWrap(map_core(layers.inner, replacement))
    raise HardError("cannot replace the core of a failed result")


def forward_under_layers(lv: LatentVal, k: Callable) -> EffectTree:
    """Reach the value hidden under earlier handlers' layers.

    ``k`` receives the bare core value and must build the rest of the
    computation (it normally also closes over the full decorated ``lv``).
    A failure short-circuits: ``k`` is never invoked and the failure is
    returned as a finished leaf.
    """
    while True:
        if isinstance(lv, Core):
            return k(lv.value)
        if isinstance(lv, LeftWrap):
            return Leaf(lv)
        if isinstance(lv, (StateWrap, RightWrap)):
            lv = lv.inner
            continue
        raise HardError(f"malformed decorated value: {type(lv).__name__}")


@dataclass(frozen=True)
class Inspection:
    core: Optional[Value]
    states: tuple
    failed: Optional[Value]


def inspect(result: LatentVal) -> Inspection:
    """Take a fully handled result apart, outermost layer first."""
    states = []
    lv = result
    while True:
        if isinstance(lv, Core):
            return Inspection(lv.value, tuple(states), None)
        if isinstance(lv, StateWrap):
            states.append(lv.payload)
            lv = lv.inner
        elif isinstance(lv, RightWrap):
            lv = lv.inner
        elif isinstance(lv, LeftWrap):
            return Inspection(None, tuple(states), lv.failure)
        else:
            raise HardError(f"malformed decorated value: {type(lv).__name__}")


def h_end(t: EffectTree) -> LatentVal:
    """Close a pipeline: every operation must have been handled away."""
    if isinstance(t, Leaf):
        return t.result
    assert isinstance(t, Node)
    raise HardError(f"unhandled operation: {t.op}")
