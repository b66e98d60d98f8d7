"""Hidden Markov models as weighted chain graphs.

An HMM with S states, an alphabet of O symbols, and an observation sequence
y of length T becomes a chain of T state variables x1..xT (cardinality S)
with T factors:

    f1(x1)        = pi(x1) * B(x1, y1)
    ft(x_{t-1},xt) = A(x_{t-1}, xt) * B(xt, yt)      for t = 2..T

so the product over a state path is exactly the joint probability of the
path and the observations, and the total weight is the evidence P(y).
Companions are the base-2 logs of the tables, which makes the chain a
posterior-entropy input: the entropy of the state posterior given y.

Construction is vectorized and the entropy carrier tables are pre-lifted
in bulk, so building plus one rescaled pass stays linear in T with a small
constant (about a second for T = 100000, S = 2).
"""

import gc
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .entropy import EntropyResult, WeightedGraph, posterior_entropy
from .errors import OutOfDomain
from .graph import FactorGraph, FactorTable, VariableDecl, _stamp_checked

_ROW_TOL = 1e-9
_LONG_CHAIN = 1000


@contextmanager
def _gc_paused():
    # Building a 1e5-step chain allocates millions of small containers;
    # the cycle collector's full passes over them cost about as much as
    # the inference itself. Nothing here creates reference cycles, so
    # pause collection for the bounded region and restore it on exit.
    # Reference counting still frees garbage immediately.
    was_enabled = gc.isenabled()
    if was_enabled:
        gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


@dataclass
class HmmSpec:
    """A validated HMM: initial law pi, transitions A, emissions B, and y.

    pi has shape (S,), A is (S, S) row stochastic, B is (S, O) row
    stochastic, observations are symbol indices in [0, O). Rows must sum
    to 1 within 1e-9 and all entries must be nonnegative.
    """

    pi: np.ndarray
    transition: np.ndarray
    emission: np.ndarray
    observations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float).ravel()
        self.transition = np.asarray(self.transition, dtype=float)
        self.emission = np.asarray(self.emission, dtype=float)
        self.observations = np.asarray(self.observations, dtype=int).ravel()
        s = self.pi.size
        if s < 1:
            raise ValueError("pi must have at least one state")
        if self.transition.shape != (s, s):
            raise ValueError(
                f"transition matrix shape {self.transition.shape} does not match {s} states"
            )
        if self.emission.ndim != 2 or self.emission.shape[0] != s:
            raise ValueError(
                f"emission matrix shape {self.emission.shape} does not match {s} states"
            )
        if self.emission.shape[1] < 1:
            raise ValueError("emission alphabet must have at least one symbol")
        if (self.pi < 0).any() or (self.transition < 0).any() or (self.emission < 0).any():
            raise ValueError("probabilities must be nonnegative")
        if abs(self.pi.sum() - 1.0) > _ROW_TOL:
            raise ValueError(f"pi sums to {self.pi.sum()!r}, expected 1 within {_ROW_TOL}")
        rows = self.transition.sum(axis=1)
        if (np.abs(rows - 1.0) > _ROW_TOL).any():
            bad = int(np.argmax(np.abs(rows - 1.0)))
            raise ValueError(
                f"transition row {bad} sums to {rows[bad]!r}, expected 1 within {_ROW_TOL}"
            )
        rows = self.emission.sum(axis=1)
        if (np.abs(rows - 1.0) > _ROW_TOL).any():
            bad = int(np.argmax(np.abs(rows - 1.0)))
            raise ValueError(
                f"emission row {bad} sums to {rows[bad]!r}, expected 1 within {_ROW_TOL}"
            )
        if self.observations.size < 1:
            raise ValueError("observation sequence must not be empty")
        o = self.emission.shape[1]
        if (self.observations < 0).any() or (self.observations >= o).any():
            bad = int(np.argmax((self.observations < 0) | (self.observations >= o)))
            raise OutOfDomain(
                f"observation at position {bad} is {self.observations[bad]},"
                f" outside the alphabet [0, {o})"
            )

    @property
    def num_states(self) -> int:
        return self.pi.size

    @property
    def num_symbols(self) -> int:
        return self.emission.shape[1]

    @property
    def num_steps(self) -> int:
        return self.observations.size


def _log2_or_zero(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(values > 0.0, np.log2(np.where(values > 0.0, values, 1.0)), 0.0)


def hmm_to_weighted_graph(h: HmmSpec) -> WeightedGraph:
    """Build the weighted chain for an observation sequence.

    Variables are named x1..xT. Tables and their log companions are
    computed in bulk; the per-factor objects hold views into the bulk
    arrays, and the entropy carrier cache is pre-filled so a following
    entropy run does not loop over factors again.
    """
    s = h.num_states
    t_len = h.num_steps
    y = h.observations

    unary = h.pi * h.emission[:, y[0]]
    variables = [VariableDecl(f"x{t + 1}", s) for t in range(t_len)]
    factors = [FactorTable("f1", ("x1",), unary)]

    unary_g = _log2_or_zero(unary)
    companions: list = [unary_g]

    lifted = [(unary.tolist(), (unary * unary_g).tolist())]
    if t_len > 1:
        # pair[t - 2][i, j] = A[i, j] * B[j, y_t]
        pair = h.transition[None, :, :] * h.emission[:, y[1:]].T[:, None, :]
        pair_g = _log2_or_zero(pair)
        pair_aux = pair * pair_g
        flat_f = pair.reshape(t_len - 1, s * s)
        flat_g = pair_g.reshape(t_len - 1, s * s)
        flat_aux = pair_aux.reshape(t_len - 1, s * s)
        f_lists = flat_f.tolist()
        aux_lists = flat_aux.tolist()
        for t in range(2, t_len + 1):
            k = t - 2
            factors.append(FactorTable(f"f{t}", (f"x{t - 1}", f"x{t}"), flat_f[k]))
            companions.append(flat_g[k])
            lifted.append((f_lists[k], aux_lists[k]))

    graph = FactorGraph(variables, factors)
    # the chain is a tree by construction; stamp its adjacency instead of
    # paying the union-find validation pass on every step
    factor_vars = [[0]] + [[k, k + 1] for k in range(t_len - 1)]
    factor_cards = [[s]] + [[s, s] for _ in range(t_len - 1)]
    if t_len == 1:
        var_factors = [[0]]
    else:
        var_factors = [[0, 1]]
        var_factors += [[k, k + 1] for k in range(1, t_len - 1)]
        var_factors.append([t_len - 1])
    _stamp_checked(graph, factor_vars, factor_cards, var_factors, 2 * t_len - 1)

    return WeightedGraph(graph, companions, _lifted_entropy=lifted, _trusted=True)


def hmm_entropy(h: HmmSpec, rescale: bool | None = None) -> EntropyResult:
    """Posterior state-sequence entropy H(X | Y = y) in bits.

    ``rescale=None`` turns per-message rescaling on automatically for
    sequences longer than 1000 steps, where the evidence would underflow.
    Raises ZeroEvidence when the observation sequence has zero probability.
    """
    if rescale is None:
        rescale = h.num_steps > _LONG_CHAIN
    if h.num_steps > _LONG_CHAIN:
        with _gc_paused():
            wg = hmm_to_weighted_graph(h)
            return posterior_entropy(wg, rescale=rescale)
    wg = hmm_to_weighted_graph(h)
    return posterior_entropy(wg, rescale=rescale)
