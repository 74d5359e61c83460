"""Composable interpreter effects with deferred execution.

Build programs as effect trees out of per-effect smart constructors (or
denote a surface AST through feature algebras), then pick their meaning by
applying an ordered pipeline of modular handlers: mutable state, reader,
exceptions, errors, arithmetic, printing, suspension, memoizing thunks,
function abstraction (call-site or definition-site), and staging.
"""

from .core import (
    AbsStore,
    Arity,
    Bound,
    CallSite,
    ClosV,
    Core,
    CtxEither,
    CtxId,
    CtxState,
    CTX_ID,
    DefSite,
    EagerStore,
    EffectId,
    EffectTree,
    Environment,
    Forced,
    Forward,
    HandlerState,
    HardError,
    Hole,
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
    NOTHING,
    ONE,
    OneKey,
    OpInstance,
    PlainEnv,
    RightWrap,
    StagedEnv,
    StateWrap,
    StrV,
    SuspStore,
    SuspV,
    ThunkRefV,
    ThunkStore,
    Unforced,
    UNIT,
    UnitV,
    Value,
    bind,
    core_value,
    env_lookup,
    env_prepend,
    forward_under_layers,
    h_end,
    inspect,
    map_core,
    pure,
    then,
)
from .effects import (
    ConfigError,
    HandlerSpec,
    RunOutcome,
    SIGNATURES,
    abs_,
    abs_cs,
    abs_ds,
    adding,
    eager,
    end,
    exc,
    failing,
    mut,
    printing,
    read,
    read_staged,
    suspending,
    thunking,
    app,
    ask,
    catch,
    enact,
    err,
    force,
    get,
    h_abs_cs,
    h_abs_ds,
    h_eager,
    h_err,
    h_exc,
    h_mut,
    h_plus,
    h_print,
    h_read,
    h_suspend,
    h_thunk,
    local,
    nat,
    plus,
    print_,
    put,
    run_inspect,
    run_pipeline,
    suspend,
    throw,
    thunk,
    var,
)
from .lam import (
    LCAbs,
    LCApp,
    LCReturn,
    LCVar,
    abs_cbn,
    abs_lazy,
    app_cbn,
    app_lazy,
    oracle_handle_abs,
    var_cbn,
    var_lazy,
)
from .staging import (
    abs_staged,
    app_staged,
    bind_val,
    combine,
    cover,
    lookup_val,
    push,
    quote,
    splice,
    unquote,
    var_staged,
)
from .lang import (
    AbsE,
    Add,
    AppE,
    AstNode,
    FeatureAlgebra,
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
    compose_features,
    denote,
    denote_with,
    feature_set,
)
