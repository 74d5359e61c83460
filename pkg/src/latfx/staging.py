"""Multi-stage programming over suspensions and telescope environments.

``quote`` delays code and captures the ambient environment; ``unquote``
enacts a code value under exactly the environment it captured.  ``push``
opens holes for binders that will only exist where the code is eventually
spliced, and ``splice`` fills those holes from its own dynamic context.

Staged environments behave like telescopes: a bound value is kept closed
under the bindings that follow it via forward references, and ``cover``
re-closes closure/code values whenever they are looked up.
"""

from __future__ import annotations

from .core import (
    Bound,
    ClosV,
    EffectTree,
    Environment,
    Forward,
    HardError,
    Hole,
    IntV,
    PlainEnv,
    StagedEnv,
    SuspV,
    Value,
    env_lookup,
    pure,
    then,
)
from .effects import ask, enact, local, suspend


def _staged(env: Environment) -> StagedEnv:
    if isinstance(env, StagedEnv):
        return env
    raise HardError("staging requires a staged environment")


def bind_val(value: Value, env: Environment) -> Environment:
    """Bind a value: a forward reference up front, the value at the back."""
    if isinstance(env, PlainEnv):
        return PlainEnv((value,) + env.values)
    slots = _staged(env).slots
    return StagedEnv((Forward(len(slots)),) + slots + (Bound(value),))


def lookup_val(env: Environment, index: int) -> Value:
    """Look a binding up, following forward references through the telescope."""
    if isinstance(env, PlainEnv):
        return env_lookup(env, index)
    slots = _staged(env).slots
    while True:
        if not 0 <= index < len(slots):
            raise HardError("bad index")
        slot, tail = slots[index], slots[index + 1 :]
        if isinstance(slot, Hole):
            raise HardError("quote error")
        if isinstance(slot, Forward):
            slots, index = tail, slot.offset
            continue
        assert isinstance(slot, Bound)
        return cover(slot.value, StagedEnv(tail))


def cover(value: Value, env: StagedEnv) -> Value:
    """Close a value over the contextual bindings in ``env``.

    Closure and code values get their captured environment combined with the
    context; ground values are untouched.
    """
    if isinstance(value, ClosV) and isinstance(value.env, StagedEnv):
        return ClosV(value.index, combine(value.env, env))
    if isinstance(value, SuspV) and isinstance(value.env, StagedEnv):
        return SuspV(value.index, combine(value.env, env))
    return value


def combine(first: StagedEnv, second: StagedEnv) -> StagedEnv:
    """Overlay ``second`` onto the holes of ``first``.

    Non-hole slots of ``first`` are kept; each hole consumes the next slot of
    ``second``; whatever remains of ``second`` is appended.  A forward
    reference pulled out of ``second`` is shifted past the rest of ``first``,
    where its target will end up.
    """
    out = []
    a, b = first.slots, second.slots
    j = 0
    for i, slot in enumerate(a):
        if not isinstance(slot, Hole):
            out.append(slot)
            continue
        if j >= len(b):
            out.extend(a[i:])
            return StagedEnv(tuple(out))
        filler = b[j]
        j += 1
        if isinstance(filler, Forward):
            filler = Forward(filler.offset + len(a) - i - 1)
        out.append(filler)
    out.extend(b[j:])
    return StagedEnv(tuple(out))


def _pointer(value: Value) -> int:
    if isinstance(value, IntV):
        return value.value
    raise HardError("bad index")


def quote(code: EffectTree) -> EffectTree:
    """Delay ``code``; yields a code value capturing the ambient environment."""
    return then(
        suspend(code),
        lambda p: then(ask(), lambda nv: pure(SuspV(_pointer(p), nv))),
    )


def unquote(m: EffectTree) -> EffectTree:
    """Run a code value under the environment it captured."""

    def run(value):
        if isinstance(value, SuspV):
            return local(lambda _ambient: value.env, enact(value.index))
        raise HardError("bad unquote")

    return then(m, run)


def push(count: int, sub: EffectTree) -> EffectTree:
    """Run ``sub`` with ``count`` unknown bindings pushed onto the environment.

    ``count`` is the number of quoted binders the resulting code will be
    spliced under.
    """
    if count < 0:
        raise HardError("bad index")

    def widen(env):
        return StagedEnv((Hole(),) * count + _staged(env).slots)

    return local(widen, sub)


def splice(m: EffectTree) -> EffectTree:
    """Like unquote, but fills the code's holes from the splice-site context."""

    def run(value):
        if isinstance(value, SuspV):
            captured = _staged(value.env)
            return local(lambda ambient: combine(captured, _staged(ambient)), enact(value.index))
        raise HardError("bad unquote")

    return then(m, run)


# --------------------------------------------------------------------------
# Binder discipline for staged programs: call-by-value abstraction built on
# Suspending + Reading over staged environments, so lambda- and let-bound
# code values flow through the same telescope that splice fills.


def abs_staged(body: EffectTree) -> EffectTree:
    return then(
        ask(),
        lambda nv: then(suspend(body), lambda p: pure(ClosV(_pointer(p), nv))),
    )


def var_staged(index: int) -> EffectTree:
    return then(ask(), lambda nv: pure(lookup_val(nv, index)))


def app_staged(fun: EffectTree, arg: EffectTree) -> EffectTree:
    def apply(vf, va):
        if isinstance(vf, ClosV):
            return local(lambda _ambient: bind_val(va, vf.env), enact(vf.index))
        raise HardError("application error")

    return then(fun, lambda vf: then(arg, lambda va: apply(vf, va)))
