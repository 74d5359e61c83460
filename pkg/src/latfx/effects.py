"""The effect library: signatures, smart constructors, and modular handlers.

Each effect contributes a handful of operations (registered in
``SIGNATURES``), smart constructors that build single-node trees with a leaf
continuation, and a handler.  A handler interprets its own operations and
forwards everything else, weaving its state through the forwarded node's
context and unweaving it when the subcomputation or continuation comes back.

Pipelines are ordered lists of handler specs, applied program-side first,
with ``end`` always last.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

from .core import (
    CTX_ID,
    NOTHING,
    ONE,
    AbsStore,
    Arity,
    CallSite,
    CtxEither,
    CtxId,
    CtxState,
    DefSite,
    EagerStore,
    EffectId,
    EffectTree,
    Environment,
    Forced,
    HandlerState,
    HardError,
    Inspection,
    IntV,
    JustKey,
    LatentCtx,
    LatentVal,
    Leaf,
    LeftWrap,
    MutState,
    Node,
    NothingKey,
    OneKey,
    OpInstance,
    PlainEnv,
    RightWrap,
    StagedEnv,
    StateWrap,
    StrV,
    SuspStore,
    ThunkStore,
    Unforced,
    UNIT,
    Value,
    bind,
    ClosV,
    env_lookup,
    env_prepend,
    forward_under_layers,
    h_end,
    inspect,
    map_core,
)

# Handler recursion nests a few Python frames per operation per handler
# layer, so pipelines run on a worker thread with a roomy stack; raising the
# recursion limit alone would hit the C stack before the limit.
_WORKER_STACK_BYTES = 256 * 1024 * 1024
_WORKER_RECURSION_LIMIT = 200_000


def _run_deep(fn: Callable):
    outcome: dict = {}

    def worker():
        previous_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(_WORKER_RECURSION_LIMIT)
        try:
            outcome["value"] = fn()
        except BaseException as exc:
            outcome["error"] = exc
        finally:
            sys.setrecursionlimit(previous_limit)

    previous = threading.stack_size()
    threading.stack_size(_WORKER_STACK_BYTES)
    try:
        thread = threading.Thread(target=worker, name="latfx-run")
        thread.start()
    finally:
        threading.stack_size(previous)
    thread.join()
    if "error" in outcome:
        raise outcome["error"]
    return outcome["value"]


SIGNATURES = {
    EffectId.READING: {"ask": Arity.NO_SUB, "local": Arity.ONE_SUB},
    EffectId.MUTATING: {"get": Arity.NO_SUB, "put": Arity.NO_SUB},
    EffectId.THROWING: {"throw": Arity.NO_SUB, "catch": Arity.MAYBE_SUB},
    EffectId.FAILING: {"err": Arity.NO_SUB},
    EffectId.ADDING: {"nat": Arity.NO_SUB, "plus": Arity.NO_SUB},
    EffectId.PRINTING: {"print": Arity.NO_SUB},
    EffectId.SUSPENDING: {"suspend": Arity.ONE_SUB, "enact": Arity.NO_SUB},
    EffectId.THUNKING: {"thunk": Arity.ONE_SUB, "force": Arity.NO_SUB},
    EffectId.ABSTRACTING: {
        "var": Arity.NO_SUB,
        "app": Arity.NO_SUB,
        "abs": Arity.ONE_SUB,
    },
    EffectId.ENDING: {},
}


def _op(effect: EffectId, name: str, payload: tuple = ()) -> OpInstance:
    return OpInstance(effect, name, payload, SIGNATURES[effect][name])


def _no_subs(key, ctx):
    raise HardError("operation has no subcomputations")


def _no_sub_node(effect: EffectId, name: str, payload: tuple = ()) -> EffectTree:
    return Node(_op(effect, name, payload), CTX_ID, _no_subs, Leaf)


def _one_sub_node(effect: EffectId, name: str, payload: tuple, sub: EffectTree) -> EffectTree:
    def subs(key, _ctx):
        if not isinstance(key, OneKey):
            raise HardError("operation has exactly one subcomputation")
        return sub

    return Node(_op(effect, name, payload), CTX_ID, subs, Leaf)


# --------------------------------------------------------------------------
# Smart constructors


def get() -> EffectTree:
    return _no_sub_node(EffectId.MUTATING, "get")


def put(value: Value) -> EffectTree:
    return _no_sub_node(EffectId.MUTATING, "put", (value,))


def ask() -> EffectTree:
    return _no_sub_node(EffectId.READING, "ask")


def local(modify: Callable, sub: EffectTree) -> EffectTree:
    """Run ``sub`` under a modified environment; the modifier must be pure."""
    return _one_sub_node(EffectId.READING, "local", (modify,), sub)


def throw(exc: Value) -> EffectTree:
    return _no_sub_node(EffectId.THROWING, "throw", (exc,))


def catch(body: EffectTree, recover: Callable) -> EffectTree:
    def subs(key, _ctx):
        if isinstance(key, NothingKey):
            return body
        if isinstance(key, JustKey):
            return recover(key.exc)
        raise HardError("bad subcomputation key for catch")

    return Node(_op(EffectId.THROWING, "catch"), CTX_ID, subs, Leaf)


def err(failure: Value) -> EffectTree:
    return _no_sub_node(EffectId.FAILING, "err", (failure,))


def nat(n: int) -> EffectTree:
    return _no_sub_node(EffectId.ADDING, "nat", (n,))


def plus(a: Value, b: Value) -> EffectTree:
    return _no_sub_node(EffectId.ADDING, "plus", (a, b))


def print_(text: str) -> EffectTree:
    return _no_sub_node(EffectId.PRINTING, "print", (text,))


def suspend(sub: EffectTree) -> EffectTree:
    return _one_sub_node(EffectId.SUSPENDING, "suspend", (), sub)


def enact(index: int) -> EffectTree:
    return _no_sub_node(EffectId.SUSPENDING, "enact", (index,))


def thunk(sub: EffectTree) -> EffectTree:
    return _one_sub_node(EffectId.THUNKING, "thunk", (), sub)


def force(index: int) -> EffectTree:
    return _no_sub_node(EffectId.THUNKING, "force", (index,))


def var(index: int) -> EffectTree:
    return _no_sub_node(EffectId.ABSTRACTING, "var", (index,))


def app(fun: Value, arg: Value) -> EffectTree:
    return _no_sub_node(EffectId.ABSTRACTING, "app", (fun, arg))


def abs_(body: EffectTree) -> EffectTree:
    return _one_sub_node(EffectId.ABSTRACTING, "abs", (), body)


# --------------------------------------------------------------------------
# Helpers shared by the state-weaving handlers


def _store_item(items: tuple, index: int):
    if not 0 <= index < len(items):
        raise HardError("bad index")
    return items[index]


def _replace(items: tuple, index: int, item) -> tuple:
    if not 0 <= index < len(items):
        raise HardError("bad index")
    return items[:index] + (item,) + items[index + 1 :]


def _unweave_ctx(ctx: LatentCtx, state_cls) -> tuple:
    if isinstance(ctx, CtxState) and isinstance(ctx.payload, state_cls):
        return ctx.payload, ctx.inner
    raise HardError(f"context is missing a {state_cls.__name__} layer")


def _unweave_val(lv: LatentVal, state_cls) -> tuple:
    if isinstance(lv, StateWrap) and isinstance(lv.payload, state_cls):
        return lv.payload, lv.inner
    raise HardError(f"result is missing a {state_cls.__name__} layer")


def _forward_with_state(node: Node, payload: HandlerState, reenter: Callable) -> Node:
    """Forward a foreign op, weaving ``payload`` into its context.

    ``reenter(state_payload, tree)`` resumes this handler with the state the
    caller supplies when it later invokes the subcomputation or continuation.
    """
    state_cls = type(payload)

    def subs(key, ctx2, _subs=node.subs):
        incoming, inner = _unweave_ctx(ctx2, state_cls)
        return reenter(incoming, _subs(key, inner))

    def cont(lv, _cont=node.cont):
        incoming, rest = _unweave_val(lv, state_cls)
        return reenter(incoming, _cont(rest))

    return Node(node.op, CtxState(payload, node.ctx), subs, cont)


# --------------------------------------------------------------------------
# Handlers


def h_mut(state: Value, t: EffectTree) -> EffectTree:
    """Mutable state; adds one state layer holding the current value."""
    if isinstance(t, Leaf):
        return Leaf(StateWrap(MutState(state), t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.MUTATING:
        if t.op.name == "get":
            return h_mut(state, t.cont(map_core(t.ctx, state)))
        (new,) = t.op.payload
        return h_mut(new, t.cont(map_core(t.ctx, UNIT)))
    return _forward_with_state(t, MutState(state), lambda st, tree: h_mut(st.value, tree))


def h_read(env: Environment, t: EffectTree) -> EffectTree:
    """Reader: ``ask``/``local``.  Adds no layer; contexts pass through."""
    if isinstance(t, Leaf):
        return t
    assert isinstance(t, Node)
    if t.op.effect is EffectId.READING:
        if t.op.name == "ask":
            return h_read(env, t.cont(map_core(t.ctx, env)))
        (modify,) = t.op.payload
        scoped = h_read(modify(env), t.subs(ONE, t.ctx))
        return bind(scoped, lambda lv: h_read(env, t.cont(lv)))
    return Node(
        t.op,
        t.ctx,
        lambda key, c2, _subs=t.subs: h_read(env, _subs(key, c2)),
        lambda lv, _cont=t.cont: h_read(env, _cont(lv)),
    )


def _either_forward(node: Node, handle: Callable) -> Node:
    # Shared by h_exc / h_err: failures propagate without invoking the
    # wrapped computation; successes re-enter the handler.
    def subs(key, c2, _subs=node.subs):
        if isinstance(c2, CtxEither):
            return handle(_subs(key, c2.inner))
        raise HardError("context is missing an either layer")

    def cont(w, _cont=node.cont):
        if isinstance(w, LeftWrap):
            return Leaf(w)
        if isinstance(w, RightWrap):
            return handle(_cont(w.inner))
        raise HardError("result is missing an either layer")

    return Node(node.op, CtxEither(node.ctx), subs, cont)


def h_exc(t: EffectTree) -> EffectTree:
    """Exceptions with resumable context: ``throw``/``catch``."""
    if isinstance(t, Leaf):
        return Leaf(RightWrap(t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.THROWING:
        if t.op.name == "throw":
            (exc,) = t.op.payload
            return Leaf(LeftWrap(t.ctx, exc))

        def after_body(z, _t=t):
            if isinstance(z, RightWrap):
                return h_exc(_t.cont(z.inner))
            if isinstance(z, LeftWrap):
                # Recover under the context captured when the throw happened.
                recovered = h_exc(_t.subs(JustKey(z.failure), z.resume_ctx))

                def after_recover(z2):
                    if isinstance(z2, RightWrap):
                        return h_exc(_t.cont(z2.inner))
                    if isinstance(z2, LeftWrap):
                        return Leaf(z2)
                    raise HardError("result is missing an either layer")

                return bind(recovered, after_recover)
            raise HardError("result is missing an either layer")

        return bind(h_exc(t.subs(NOTHING, t.ctx)), after_body)
    return _either_forward(t, h_exc)


def h_err(t: EffectTree) -> EffectTree:
    """Non-resumable errors: ``err`` aborts the rest of the computation."""
    if isinstance(t, Leaf):
        return Leaf(RightWrap(t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.FAILING:
        (failure,) = t.op.payload
        return Leaf(LeftWrap(None, failure))
    return _either_forward(t, h_err)


def _as_int(value: Value) -> int:
    if isinstance(value, IntV):
        return value.value
    raise HardError("plus error: expected an integer value")


def h_plus(t: EffectTree) -> EffectTree:
    """Natural-number literals and addition.  No layer added."""
    if isinstance(t, Leaf):
        return t
    assert isinstance(t, Node)
    if t.op.effect is EffectId.ADDING:
        if t.op.name == "nat":
            (n,) = t.op.payload
            return h_plus(t.cont(map_core(t.ctx, IntV(n))))
        a, b = t.op.payload
        return h_plus(t.cont(map_core(t.ctx, IntV(_as_int(a) + _as_int(b)))))
    return Node(
        t.op,
        t.ctx,
        lambda key, c2, _subs=t.subs: h_plus(_subs(key, c2)),
        lambda lv, _cont=t.cont: h_plus(_cont(lv)),
    )


def h_print(t: EffectTree, log: List[str]) -> EffectTree:
    """Printing: yields the printed string and appends it to the run log.

    Handling a print *is* performing it, so the log order depends on where
    this handler sits.  Applied first (contexts still the identity), it
    pre-handles deferred single subcomputations: prints inside quoted or
    suspended code are performed at definition time.  Applied after the
    suspension handler, those prints run when the code is enacted.
    """
    if isinstance(t, Leaf):
        return t
    assert isinstance(t, Node)
    if t.op.effect is EffectId.PRINTING:
        (text,) = t.op.payload
        log.append(text)
        return h_print(t.cont(map_core(t.ctx, StrV(text))), log)
    if t.op.arity is Arity.ONE_SUB and isinstance(t.ctx, CtxId):
        # Innermost position: subcomputation selectors ignore their context,
        # so the sub can be handled once, eagerly, and memoized.
        handled_sub = h_print(t.subs(ONE, CTX_ID), log)
        return Node(
            t.op,
            t.ctx,
            lambda _key, _c2: handled_sub,
            lambda lv, _cont=t.cont: h_print(_cont(lv), log),
        )
    return Node(
        t.op,
        t.ctx,
        lambda key, c2, _subs=t.subs: h_print(_subs(key, c2), log),
        lambda lv, _cont=t.cont: h_print(_cont(lv), log),
    )


def h_suspend(store, t: EffectTree) -> EffectTree:
    """Delayed evaluation without memoization; every enact re-runs."""
    store = tuple(store)
    if isinstance(t, Leaf):
        return Leaf(StateWrap(SuspStore(store), t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.SUSPENDING:
        if t.op.name == "suspend":
            suspension = lambda c, _subs=t.subs: _subs(ONE, c)
            pointer = map_core(t.ctx, IntV(len(store)))
            return h_suspend(store + (suspension,), t.cont(pointer))
        (index,) = t.op.payload
        suspension = _store_item(store, index)

        def after(w, _t=t):
            payload, lv = _unweave_val(w, SuspStore)
            return h_suspend(payload.suspensions, _t.cont(lv))

        return bind(h_suspend(store, suspension(t.ctx)), after)
    return _forward_with_state(
        t, SuspStore(store), lambda st, tree: h_suspend(st.suspensions, tree)
    )


def h_thunk(store, t: EffectTree) -> EffectTree:
    """Memoizing delayed evaluation; a slot is forced at most once."""
    store = tuple(store)
    if isinstance(t, Leaf):
        return Leaf(StateWrap(ThunkStore(store), t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.THUNKING:
        if t.op.name == "thunk":
            slot = Unforced(lambda c, _subs=t.subs: _subs(ONE, c))
            pointer = map_core(t.ctx, IntV(len(store)))
            return h_thunk(store + (slot,), t.cont(pointer))
        (index,) = t.op.payload
        slot = _store_item(store, index)
        if isinstance(slot, Forced):
            return h_thunk(store, t.cont(map_core(t.ctx, slot.value)))

        def after(w, _t=t, _index=index):
            payload, lv = _unweave_val(w, ThunkStore)

            def memoize(value):
                updated = _replace(payload.slots, _index, Forced(value))
                return h_thunk(updated, _t.cont(lv))

            return forward_under_layers(lv, memoize)

        return bind(h_thunk(store, slot.run(t.ctx)), after)
    return _forward_with_state(
        t, ThunkStore(store), lambda st, tree: h_thunk(st.slots, tree)
    )


def h_eager(store, t: EffectTree) -> EffectTree:
    """Alternative thunk handler: evaluate immediately, store the value."""
    store = tuple(store)
    if isinstance(t, Leaf):
        return Leaf(StateWrap(EagerStore(store), t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.THUNKING:
        if t.op.name == "thunk":

            def after(w, _t=t):
                payload, lv = _unweave_val(w, EagerStore)

                def stash(value):
                    index = len(payload.values)
                    # Resume with the post-subtree layers, not the node's
                    # stale context: the eager run may have changed them.
                    return h_eager(
                        payload.values + (value,),
                        _t.cont(map_core(lv, IntV(index))),
                    )

                return forward_under_layers(lv, stash)

            return bind(h_eager(store, t.subs(ONE, t.ctx)), after)
        (index,) = t.op.payload
        value = _store_item(store, index)
        return h_eager(store, t.cont(map_core(t.ctx, value)))
    return _forward_with_state(
        t, EagerStore(store), lambda st, tree: h_eager(st.values, tree)
    )


def _as_closure(value: Value) -> ClosV:
    if isinstance(value, ClosV):
        return value
    raise HardError("application error")


def _extend(value: Value, env: Environment) -> Environment:
    if isinstance(env, PlainEnv):
        return env_prepend(value, env)
    from .staging import bind_val  # StagedEnv binding lives with the telescope ops

    return bind_val(value, env)


def h_abs_cs(env, store, t: EffectTree) -> EffectTree:
    """Function abstraction, bodies run under their call-site context."""
    env = env if isinstance(env, Environment) else PlainEnv(tuple(env))
    store = tuple(store)
    if isinstance(t, Leaf):
        return Leaf(StateWrap(AbsStore(store), t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.ABSTRACTING:
        if t.op.name == "abs":
            closure = ClosV(len(store), env)
            resumption = CallSite(lambda c, _subs=t.subs: _subs(ONE, c))
            return h_abs_cs(env, store + (resumption,), t.cont(map_core(t.ctx, closure)))
        if t.op.name == "app":
            fun, arg = t.op.payload
            closure = _as_closure(fun)
            resumption = _store_item(store, closure.index)
            body = resumption.run(t.ctx)  # call-site context

            def after(w, _t=t):
                payload, lv = _unweave_val(w, AbsStore)
                return h_abs_cs(env, payload.resumptions, _t.cont(lv))

            return bind(h_abs_cs(_extend(arg, closure.env), store, body), after)
        (index,) = t.op.payload
        value = env_lookup(env, index)
        return h_abs_cs(env, store, t.cont(map_core(t.ctx, value)))
    return _forward_with_state(
        t, AbsStore(store), lambda st, tree: h_abs_cs(env, st.resumptions, tree)
    )


def h_abs_ds(env, store, t: EffectTree) -> EffectTree:
    """Function abstraction, bodies run under their definition-site context."""
    env = env if isinstance(env, Environment) else PlainEnv(tuple(env))
    store = tuple(store)
    if isinstance(t, Leaf):
        return Leaf(StateWrap(AbsStore(store), t.result))
    assert isinstance(t, Node)
    if t.op.effect is EffectId.ABSTRACTING:
        if t.op.name == "abs":
            closure = ClosV(len(store), env)
            resumption = DefSite(t.subs(ONE, t.ctx))  # definition-site context
            return h_abs_ds(env, store + (resumption,), t.cont(map_core(t.ctx, closure)))
        if t.op.name == "app":
            fun, arg = t.op.payload
            closure = _as_closure(fun)
            resumption = _store_item(store, closure.index)

            def after(w, _t=t):
                payload, lv = _unweave_val(w, AbsStore)
                return h_abs_ds(env, payload.resumptions, _t.cont(lv))

            return bind(h_abs_ds(_extend(arg, closure.env), store, resumption.tree), after)
        (index,) = t.op.payload
        value = env_lookup(env, index)
        return h_abs_ds(env, store, t.cont(map_core(t.ctx, value)))
    return _forward_with_state(
        t, AbsStore(store), lambda st, tree: h_abs_ds(env, st.resumptions, tree)
    )


# --------------------------------------------------------------------------
# Pipelines


class ConfigError(Exception):
    """Bad pipeline or feature configuration."""


HANDLER_NAMES = (
    "mut",
    "read",
    "read-staged",
    "abs-cs",
    "abs-ds",
    "suspend",
    "thunk",
    "eager",
    "exc",
    "err",
    "plus",
    "print",
    "end",
)


@dataclass(frozen=True)
class HandlerSpec:
    """A handler as a value: its name plus initial parameters."""

    name: str
    params: tuple = ()


def mut(initial=0) -> HandlerSpec:
    value = IntV(initial) if isinstance(initial, int) else initial
    return HandlerSpec("mut", (value,))


def read(env: Environment = PlainEnv()) -> HandlerSpec:
    return HandlerSpec("read", (env,))


def read_staged(env: Environment = StagedEnv()) -> HandlerSpec:
    return HandlerSpec("read-staged", (env,))


def abs_cs(env=PlainEnv(), store=()) -> HandlerSpec:
    return HandlerSpec("abs-cs", (env, tuple(store)))


def abs_ds(env=PlainEnv(), store=()) -> HandlerSpec:
    return HandlerSpec("abs-ds", (env, tuple(store)))


def suspending(store=()) -> HandlerSpec:
    return HandlerSpec("suspend", (tuple(store),))


def thunking(store=()) -> HandlerSpec:
    return HandlerSpec("thunk", (tuple(store),))


def eager(store=()) -> HandlerSpec:
    return HandlerSpec("eager", (tuple(store),))


def exc() -> HandlerSpec:
    return HandlerSpec("exc")


def failing() -> HandlerSpec:
    return HandlerSpec("err")


def adding() -> HandlerSpec:
    return HandlerSpec("plus")


def printing() -> HandlerSpec:
    return HandlerSpec("print")


def end() -> HandlerSpec:
    return HandlerSpec("end")


def apply_handler(spec: HandlerSpec, t: EffectTree, log: List[str]) -> EffectTree:
    name = spec.name
    if name == "mut":
        return h_mut(spec.params[0], t)
    if name in ("read", "read-staged"):
        return h_read(spec.params[0], t)
    if name == "abs-cs":
        return h_abs_cs(spec.params[0], spec.params[1], t)
    if name == "abs-ds":
        return h_abs_ds(spec.params[0], spec.params[1], t)
    if name == "suspend":
        return h_suspend(spec.params[0], t)
    if name == "thunk":
        return h_thunk(spec.params[0], t)
    if name == "eager":
        return h_eager(spec.params[0], t)
    if name == "exc":
        return h_exc(t)
    if name == "err":
        return h_err(t)
    if name == "plus":
        return h_plus(t)
    if name == "print":
        return h_print(t, log)
    raise ConfigError(f"unknown handler: {name}")


@dataclass
class RunOutcome:
    value: LatentVal
    prints: List[str] = field(default_factory=list)

    def inspection(self) -> Inspection:
        return inspect(self.value)


def run_pipeline(
    t: EffectTree, specs: Sequence[HandlerSpec], log: Optional[List[str]] = None
) -> RunOutcome:
    """Apply the handlers in order (first = program side) and close with end."""
    specs = list(specs)
    if not specs or specs[-1].name != "end":
        raise ConfigError("pipeline must end with 'end'")
    if any(s.name == "end" for s in specs[:-1]):
        raise ConfigError("'end' must appear exactly once, last")
    if log is None:
        log = []

    def go():
        out = t
        for spec in specs[:-1]:
            out = apply_handler(spec, out, log)
        return h_end(out)

    return RunOutcome(_run_deep(go), log)


def run_inspect(t: EffectTree, specs: Sequence[HandlerSpec]):
    outcome = run_pipeline(t, specs)
    return outcome.inspection(), outcome.prints
