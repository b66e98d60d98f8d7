"""Message passing on acyclic factor graphs, generic over the semiring.

Two message kinds, both vectors over a variable's domain:

- variable to factor: the pointwise product of the factor-to-variable
  messages arriving from every OTHER neighboring factor,
- factor to variable: the semiring sum, over the factor's other scope
  variables, of the factor table times the incoming variable messages.

Leaves fall out of the same two rules: a leaf variable sends the all-ones
vector (empty product) and a unary factor sends its own lifted table (empty
sum). A schedule from :func:`fginfer.graph.make_schedule` lists directed
edges so that every feeding message exists before it is needed; one pass
yields the root marginal, a second pass yields every marginal.

Optional per-message rescaling divides a freshly computed message by its
largest score magnitude and accumulates the log of the divisor in a
per-edge running total, so products on long chains neither underflow nor
overflow. All-zero messages are left untouched. Totals are reported next
to the accumulated log scale; quantities that are ratios of message
components do not feel the scaling at all.

Everything here is single threaded; stores must not be shared across
threads while messages are still being written.
"""

import math
from dataclasses import dataclass, field

from .errors import MissingDependency
from .graph import FactorGraph, Schedule, make_schedule
from .semiring import Semiring

_LN = math.log


class MessageStore:
    """Holds the directed messages of one run plus their log scales.

    ``q`` maps (variable index, factor index) to variable-to-factor
    messages; ``r`` maps (factor index, variable index) to factor-to-
    variable messages. The parallel ``q_scale`` / ``r_scale`` dicts carry
    the accumulated natural-log scale of each message (all zero when
    rescaling is off). Message vectors are owned by the store and must be
    treated as immutable by callers.
    """

    def __init__(self, graph: FactorGraph, semiring: Semiring, rescale: bool = False,
                 companions=None, tables=None):
        graph.ensure_checked()
        self.graph = graph
        self.semiring = semiring
        self.rescale = bool(rescale)
        if tables is None:
            if companions is None:
                companions = [None] * len(graph.factors)
            tables = [
                semiring.lift_table(f.values, companions[fi])
                for fi, f in enumerate(graph.factors)
            ]
        self.tables = tables
        self.q: dict = {}
        self.r: dict = {}
        self.q_scale: dict = {}
        self.r_scale: dict = {}

    def message_count(self) -> int:
        return len(self.q) + len(self.r)


def _send_v2f(store: MessageStore, vi: int, fi: int):
    g = store.graph
    s = store.semiring
    msgs = []
    acc = 0.0
    r = store.r
    r_scale = store.r_scale
    for f2 in g.var_factors[vi]:
        if f2 != fi:
            key = (f2, vi)
            m = r.get(key)
            if m is None:
                raise MissingDependency(
                    f"message {g.factors[f2].id!r} -> {g.variables[vi].id!r} not computed yet"
                )
            msgs.append(m)
            # a message with no recorded scale was never rescaled
            acc += r_scale.get(key, 0.0)
    msg = s.combine(msgs, g.variables[vi].cardinality)
    # single-input messages are aliased, already scaled by induction
    if store.rescale and s.supports_rescaling and len(msgs) != 1:
        mx = s.max_abs_score(msg)
        if mx != 0.0 and mx != 1.0:
            s.scale_msg_inplace(msg, 1.0 / mx)
            acc += _LN(mx)
    store.q[(vi, fi)] = msg
    store.q_scale[(vi, fi)] = acc
    return msg


def _send_f2v(store: MessageStore, fi: int, vi: int):
    g = store.graph
    s = store.semiring
    q = store.q
    q_scale = store.q_scale
    incoming = []
    acc = 0.0
    tpos = -1
    for pos, v2 in enumerate(g.factor_vars[fi]):
        if v2 == vi:
            tpos = pos
            continue
        key = (v2, fi)
        m = q.get(key)
        if m is None:
            raise MissingDependency(
                f"message {g.variables[v2].id!r} -> {g.factors[fi].id!r} not computed yet"
            )
        incoming.append((pos, m))
        acc += q_scale.get(key, 0.0)
    if tpos < 0:
        raise MissingDependency(
            f"variable {g.variables[vi].id!r} is not in the scope of factor {g.factors[fi].id!r}"
        )
    msg = s.contract(store.tables[fi], g.factor_cards[fi], incoming, tpos)
    if store.rescale and s.supports_rescaling:
        mx = s.max_abs_score(msg)
        if mx != 0.0 and mx != 1.0:
            s.scale_msg_inplace(msg, 1.0 / mx)
            acc += _LN(mx)
    store.r[(fi, vi)] = msg
    store.r_scale[(fi, vi)] = acc
    return msg


def variable_to_factor(store: MessageStore, n: str, m: str):
    """Compute, store, and return the message from variable n to factor m."""
    g = store.graph
    vi = g.variable_position(n)
    fi = _factor_position(g, m)
    if (vi, fi) in store.q:
        raise ValueError(f"message {n!r} -> {m!r} was already written this pass")
    return _send_v2f(store, vi, fi)


def factor_to_variable(store: MessageStore, m: str, n: str):
    """Compute, store, and return the message from factor m to variable n."""
    g = store.graph
    vi = g.variable_position(n)
    fi = _factor_position(g, m)
    if (fi, vi) in store.r:
        raise ValueError(f"message {m!r} -> {n!r} was already written this pass")
    return _send_f2v(store, fi, vi)


def init_leaf_messages(store: MessageStore) -> MessageStore:
    """Populate the messages leaving every leaf node of the graph.

    Leaf variables send the all-ones vector toward their only factor; unary
    factors send their lifted table. Running the two kernels on those edges
    produces exactly that, so this is a convenience wrapper, not a separate
    rule.
    """
    g = store.graph
    for vi, touching in enumerate(g.var_factors):
        if len(touching) == 1 and (vi, touching[0]) not in store.q:
            _send_v2f(store, vi, touching[0])
    for fi, fvars in enumerate(g.factor_vars):
        if len(fvars) == 1 and (fi, fvars[0]) not in store.r:
            _send_f2v(store, fi, fvars[0])
    return store


def _factor_position(g: FactorGraph, factor_id: str) -> int:
    for fi, f in enumerate(g.factors):
        if f.id == factor_id:
            return fi
    raise KeyError(f"unknown factor {factor_id!r}")


@dataclass
class MarginalResult:
    """An unnormalized marginal vector plus its accumulated log scale."""

    variable: str
    msg: object
    log_scale: float
    semiring: Semiring = field(repr=False)

    def scores(self) -> list:
        """Score components, one per domain value (the raw vector for
        real semirings)."""
        return self.semiring.scores(self.msg)

    def weights(self) -> list:
        return self.semiring.msg_weights(self.msg)


def _execute(store: MessageStore, schedule: Schedule) -> None:
    send_v2f = _send_v2f
    send_f2v = _send_f2v
    for to_factor, vi, fi in schedule.edges:
        if to_factor:
            send_v2f(store, vi, fi)
        else:
            send_f2v(store, fi, vi)


def marginal_at(store: MessageStore, var_id: str) -> MarginalResult:
    """Combine all factor-to-variable messages at one variable.

    Needs every incoming message, so after a one-pass run only the
    component roots qualify.
    """
    g = store.graph
    s = store.semiring
    vi = g.variable_position(var_id)
    msgs = []
    acc = 0.0
    for fi in g.var_factors[vi]:
        key = (fi, vi)
        m = store.r.get(key)
        if m is None:
            raise MissingDependency(
                f"marginal at {var_id!r} needs message from factor {g.factors[fi].id!r};"
                " run with two_pass=True for non-root variables"
            )
        msgs.append(m)
        acc += store.r_scale.get(key, 0.0)
    msg = s.combine(msgs, g.variables[vi].cardinality)
    return MarginalResult(variable=var_id, msg=msg, log_scale=acc, semiring=s)


def run(g: FactorGraph, s: Semiring, root: str | None = None, two_pass: bool = False,
        rescale: bool = False, companions=None, tables=None):
    """Run message passing to completion; returns (marginals, store).

    One pass computes the marginal at the root (and at each extra
    component's local root on forests); ``two_pass=True`` computes the
    marginal of every variable. ``companions`` optionally pairs each factor
    table with a companion table for semirings that lift pairs; ``tables``
    optionally supplies pre-lifted carrier tables and overrides both.
    """
    g.ensure_checked()
    schedule = make_schedule(g, root=root, two_pass=two_pass)
    store = MessageStore(g, s, rescale=rescale, companions=companions, tables=tables)
    _execute(store, schedule)
    if two_pass:
        targets = range(len(g.variables))
    else:
        targets = schedule.component_roots
    marginals = {}
    for vi in targets:
        vid = g.variables[vi].id
        marginals[vid] = marginal_at(store, vid)
    return marginals, store


def total_sum(marginal: MarginalResult, s: Semiring | None = None, apply_scale: bool = True):
    """Semiring sum of a marginal vector: the per-component total weight.

    With ``apply_scale`` the accumulated log scale is folded back in by
    multiplying with exp(log_scale); that can overflow for very long
    chains, in which case keep the scale separate.
    """
    s = s or marginal.semiring
    w = s.reduce_msg(marginal.msg)
    if apply_scale and marginal.log_scale != 0.0:
        w = s.scale_weight(w, math.exp(marginal.log_scale))
    return w
