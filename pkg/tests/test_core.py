"""Core tree structure: bind, map_core, forward_under_layers, inspect, h_end."""

import random

import pytest

from latfx import (
    Core,
    HardError,
    IntV,
    Leaf,
    LeftWrap,
    MutState,
    RightWrap,
    StateWrap,
    StrV,
    UnitV,
    bind,
    forward_under_layers,
    get,
    h_end,
    inspect,
    map_core,
    pure,
    put,
    then,
)
from helpers import gen_state_fn, gen_state_tree, observe, spine_ops


def test_bind_left_identity():
    calls = []

    def f(lv):
        calls.append(lv)
        return Leaf(lv)

    result = bind(Leaf(Core(IntV(3))), f)
    assert result == Leaf(Core(IntV(3)))
    assert calls == [Core(IntV(3))]


def test_bind_right_identity_observational():
    rng = random.Random(7)
    for _ in range(30):
        t = gen_state_tree(rng, rng.randrange(1, 6))
        assert observe(t, "mut=0,plus,end") == observe(bind(t, Leaf), "mut=0,plus,end")


def test_bind_associativity_observational():
    # 100 random trees over the state effect, both associations agree on
    # (value, final state) after full handling.
    rng = random.Random(11)
    for _ in range(100):
        size = rng.randrange(0, 5)
        t = gen_state_tree(rng, size)
        f = gen_state_fn(rng, rng.randrange(0, 4))
        g = gen_state_fn(rng, rng.randrange(0, 4))
        lhs = bind(bind(t, lambda lv: f(lv.value)), lambda lv: g(lv.value))
        rhs = bind(t, lambda lv: bind(f(lv.value), lambda lv2: g(lv2.value)))
        assert observe(lhs, "mut=0,plus,end") == observe(rhs, "mut=0,plus,end")


def test_bind_preserves_spine_structure():
    rng = random.Random(3)
    for _ in range(25):
        t = gen_state_tree(rng, rng.randrange(1, 6))
        assert spine_ops(bind(t, Leaf)) == spine_ops(t)


def test_map_core_plain():
    assert map_core(Core(UnitV()), IntV(5)) == Core(IntV(5))


def test_map_core_keeps_state_layer():
    wrapped = StateWrap(MutState(IntV(1)), Core(UnitV()))
    assert map_core(wrapped, IntV(5)) == StateWrap(MutState(IntV(1)), Core(IntV(5)))


def test_map_core_keeps_either_layer():
    assert map_core(RightWrap(Core(UnitV())), StrV("x")) == RightWrap(Core(StrV("x")))


def test_map_core_shape_preserving():
    def shape(lv):
        out = []
        while not isinstance(lv, Core):
            out.append(type(lv).__name__)
            lv = lv.inner
        return out

    lv = StateWrap(MutState(IntV(2)), RightWrap(StateWrap(MutState(IntV(9)), Core(UnitV()))))
    replaced = map_core(lv, IntV(7))
    assert shape(replaced) == shape(lv)
    assert inspect(replaced).core == IntV(7)


def test_map_core_rejects_failures():
    with pytest.raises(HardError):
        map_core(LeftWrap(None, StrV("boom")), IntV(1))
    with pytest.raises(HardError):
        map_core(StateWrap(MutState(IntV(0)), LeftWrap(None, StrV("boom"))), IntV(1))


def test_forward_under_layers_core_is_definitional():
    marker = pure(IntV(99))
    result = forward_under_layers(Core(IntV(2)), lambda v: marker if v == IntV(2) else Leaf(Core(v)))
    assert result is marker


def test_forward_under_layers_peels_state_layers():
    seen = []
    lv = StateWrap(MutState(IntV(4)), RightWrap(Core(IntV(2))))
    forward_under_layers(lv, lambda v: (seen.append(v), pure(v))[1])
    assert seen == [IntV(2)]


def test_forward_under_layers_short_circuits_failures():
    failure = LeftWrap(None, StrV("e"))
    called = []
    result = forward_under_layers(failure, lambda v: (called.append(v), pure(v))[1])
    assert result == Leaf(failure)
    assert called == []


def test_inspect_plain_core():
    got = inspect(Core(IntV(5)))
    assert (got.core, got.states, got.failed) == (IntV(5), (), None)


def test_inspect_failure():
    got = inspect(LeftWrap(None, StrV("boom")))
    assert got.core is None
    assert got.states == ()
    assert got.failed == StrV("boom")


def test_inspect_collects_states_outermost_first():
    lv = StateWrap(MutState(IntV(1)), StateWrap(MutState(IntV(2)), Core(IntV(3))))
    got = inspect(lv)
    assert got.states == (MutState(IntV(1)), MutState(IntV(2)))
    assert got.core == IntV(3)


def test_h_end_extracts_leaf():
    assert h_end(Leaf(Core(IntV(4)))) == Core(IntV(4))


def test_h_end_rejects_unhandled_operations():
    with pytest.raises(HardError, match=r"unhandled operation: Mutating\.get"):
        h_end(get())


def test_then_sequences_values():
    t = then(put(IntV(7)), lambda _: get())
    core, failed, states, prints = observe(t, "mut=0,end")
    assert core == IntV(7)
    assert states == (MutState(IntV(7)),)


def test_long_programs_run_within_the_worker_stack():
    from latfx import IntV, get, put

    def chain(i, value):
        if i == 0:
            return pure(value)
        return then(put(value), lambda _: then(get(), lambda s: chain(i - 1, IntV(s.value + 1))))

    import sys

    previous = sys.getrecursionlimit()
    sys.setrecursionlimit(20000)  # tree construction itself recurses
    try:
        tree = chain(2000, IntV(0))
    finally:
        sys.setrecursionlimit(previous)
    core, _, _, _ = observe(tree, "mut=0,read,suspend,plus,end")
    assert core == IntV(2000)
