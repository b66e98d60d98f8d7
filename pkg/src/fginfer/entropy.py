"""Partition/entropy runs: factor graphs whose tables carry companions.

A weighted factor pairs a nonnegative table f with a companion table g of
the same shape; running the engine over the entropy semiring on the lifted
pairs (f, f*g) returns, in one pass, the pair

    Z = sum_x prod_m f_m(x_m)
    H = sum_x prod_m f_m(x_m) * sum_m g_m(x_m)

When every companion is the base-2 log of its table, those two numbers
give the entropy of the distribution the graph defines:

    H(X) = -H/Z + log2(Z)   [bits]

which is exactly the posterior entropy of a model conditioned on observed
evidence once the evidence has been folded into the tables. The quotient
H/Z ignores uniform message rescaling, and log2(Z) is reconstructed from
the accumulated log scale, so the formula stays finite on chains far past
float range.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain, ZeroEvidence
from .graph import FactorGraph, FactorTable, validate
from .propagation import run
from .semiring import ENTROPY, SUM_PRODUCT, Semiring

_LN2 = math.log(2.0)
_Z_FLOOR = 1e-300


@dataclass
class WeightedFactor:
    """A factor table and an optional companion table of equal length.

    Companion entries may be undefined (None or non-finite) only where the
    paired value is zero; those entries are normalized to 0 on lifting,
    which encodes the 0 * log(0) = 0 convention.
    """

    table: FactorTable
    companion: np.ndarray | None = None


@dataclass
class EntropyResult:
    """The (Z, H) pair of a run, with its log scale and derived entropy.

    ``Z`` and ``H`` are as the engine reported them: when rescaling was on,
    the true totals are Z * exp(log_scale) and H * exp(log_scale). The
    ratio H/Z needs no correction. ``entropy_bits`` is filled in by
    :func:`posterior_entropy` and is None otherwise.
    """

    Z: float
    H: float
    log_scale: float = 0.0
    entropy_bits: float | None = None

    def scaled_z(self) -> float:
        return self.Z * math.exp(self.log_scale)

    def scaled_h(self) -> float:
        return self.H * math.exp(self.log_scale)

    def log2_z(self) -> float:
        if self.Z <= 0.0:
            raise ZeroEvidence("total weight is zero; log2(Z) undefined")
        return (math.log(self.Z) + self.log_scale) / _LN2


class WeightedGraph:
    """A validated factor graph plus per-factor companion tables.

    Lifted carrier tables are cached per semiring so repeated runs (and
    bulk-built chains, which pre-fill the cache) skip the lift loop.
    """

    def __init__(self, graph: FactorGraph, companions=None, _lifted_entropy=None,
                 _trusted: bool = False):
        self.graph = validate(graph)
        if companions is None:
            companions = [None] * len(graph.factors)
        if len(companions) != len(graph.factors):
            raise ValueError(
                f"{len(companions)} companion tables for {len(graph.factors)} factors"
            )
        if _trusted:
            # bulk builders construct finite, length-matched companions
            self.companions = list(companions)
        else:
            self.companions = [
                None if c is None else _check_companion(graph.factors[i], c)
                for i, c in enumerate(companions)
            ]
        self._table_cache: dict[str, list] = {}
        if _lifted_entropy is not None:
            self._table_cache[ENTROPY.name] = _lifted_entropy

    def carrier_tables(self, s: Semiring) -> list:
        cached = self._table_cache.get(s.name)
        if cached is None:
            cached = [
                s.lift_table(f.values, self.companions[fi])
                for fi, f in enumerate(self.graph.factors)
            ]
            self._table_cache[s.name] = cached
        return cached


def _check_companion(factor: FactorTable, companion) -> np.ndarray:
    companion = np.asarray(companion, dtype=float).ravel()
    if companion.shape != factor.values.shape:
        raise ValueError(
            f"factor {factor.id!r}: companion length {companion.size} != table length"
            f" {factor.values.size}"
        )
    bad = ~np.isfinite(companion) & (factor.values != 0.0)
    if bad.any():
        raise ValueError(
            f"factor {factor.id!r}: companion must be finite wherever the value is nonzero"
        )
    # normalize undefined entries under zero values to 0
    if not np.isfinite(companion).all():
        companion = np.where(factor.values == 0.0, 0.0, companion)
    return companion


def lift_graph(factors, variables) -> WeightedGraph:
    """Assemble weighted factors and variable declarations into a graph.

    Accepts an iterable of :class:`WeightedFactor` (or bare
    :class:`FactorTable`, treated as companion-free). Validates structure
    and companions; the actual pair lifting happens lazily per semiring.
    """
    tables = []
    companions = []
    for wf in factors:
        if isinstance(wf, FactorTable):
            tables.append(wf)
            companions.append(None)
        else:
            tables.append(wf.table)
            companions.append(wf.companion)
    return WeightedGraph(FactorGraph(variables, tables), companions)


def _as_weighted(g) -> WeightedGraph:
    if isinstance(g, WeightedGraph):
        return g
    return WeightedGraph(g)


def compute_zh(wg, root: str | None = None, rescale: bool = False) -> EntropyResult:
    """Z and H of a weighted graph in a single entropy-semiring pass.

    On forests the per-component pairs are combined with the semiring
    product (scores multiply; aux terms follow the product rule), which is
    the joint (Z, H) of the independent components.
    """
    wg = _as_weighted(wg)
    marginals, store = run(
        wg.graph, ENTROPY, root=root, two_pass=False, rescale=rescale,
        tables=wg.carrier_tables(ENTROPY),
    )
    total = ENTROPY.one
    log_scale = 0.0
    for marg in marginals.values():
        total = ENTROPY.mul(total, ENTROPY.reduce_msg(marg.msg))
        log_scale += marg.log_scale
    return EntropyResult(Z=total.score, H=total.aux, log_scale=log_scale)


def posterior_entropy(wg, root: str | None = None, rescale: bool = False) -> EntropyResult:
    """Entropy in bits of the distribution defined by a weighted graph.

    Requires nonnegative tables whose companions are the base-2 logs of the
    values (undefined at zeros). The result combines the run's pair as
    -H/Z + log2(Z), reconstructing log2(Z) from the accumulated log scale.
    Raises ZeroEvidence when the weight the run holds is numerically zero
    (below 1e-300): without rescaling that is the full total, with rescaling
    it is the order-one mantissa, so long chains whose true evidence only
    underflows in the unscaled representation still get an entropy. Tiny
    negative outcomes from roundoff (>= -1e-9) are clamped to exactly 0.
    """
    res = compute_zh(wg, root=root, rescale=rescale)
    if res.Z <= 0.0:
        raise ZeroEvidence(f"total weight Z = {res.Z}; no assignment has positive weight")
    if res.Z < _Z_FLOOR:
        raise ZeroEvidence(f"total weight {res.Z} is below 1e-300")
    log_z = math.log(res.Z) + res.log_scale
    bits = -res.H / res.Z + log_z / _LN2
    if -1e-9 <= bits < 0.0:
        bits = 0.0
    return EntropyResult(Z=res.Z, H=res.H, log_scale=res.log_scale, entropy_bits=bits)


def entropy_in_base(bits: float, base: str) -> float:
    """Convert an entropy in bits to the requested unit ("2" or "e")."""
    if base == "2":
        return bits
    if base == "e":
        return bits * _LN2
    raise ValueError(f"unsupported entropy base {base!r}; use '2' or 'e'")


def derive_log2_companions(graph: FactorGraph) -> list:
    """Base-2 log companions for every factor table (0 where the value is 0).

    The tables must be nonnegative; this is the g = log2(f) choice that
    makes :func:`posterior_entropy` applicable to a plain graph.
    """
    out = []
    for f in graph.factors:
        v = f.values
        if (v < 0).any():
            raise OutOfDomain(
                f"factor {f.id!r}: log companions need nonnegative values"
            )
        with np.errstate(divide="ignore"):
            out.append(np.where(v > 0.0, np.log2(np.where(v > 0.0, v, 1.0)), 0.0))
    return out


def first_component_scores(store, kind: str, key) -> list:
    """Score components of a stored message, for shadowing comparisons.

    ``kind`` is "q" or "r"; ``key`` the store's (index, index) key.
    """
    msg = (store.q if kind == "q" else store.r)[key]
    return store.semiring.scores(msg)


def sum_product_total(g, root=None, rescale=False):
    """Total weight over the sum-product semiring, as (Z, log_scale).

    Convenience used by the CLI partition path; components multiply.
    """
    marginals, _ = run(_plain_graph(g), SUM_PRODUCT, root=root, rescale=rescale)
    z = 1.0
    log_scale = 0.0
    for marg in marginals.values():
        z *= SUM_PRODUCT.reduce_msg(marg.msg)
        log_scale += marg.log_scale
    return z, log_scale


def _plain_graph(g) -> FactorGraph:
    return g.graph if isinstance(g, WeightedGraph) else g
