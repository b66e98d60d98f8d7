import math

import numpy as np
import pytest

from fginfer import (
    FactorGraph,
    FactorTable,
    OutOfDomain,
    VariableDecl,
    WeightedFactor,
    WeightedGraph,
    ZeroEvidence,
    compute_zh,
    derive_log2_companions,
    entropy_in_base,
    lift_graph,
    posterior_entropy,
)
from fginfer.oracle import enumerate_entropy, enumerate_h, enumerate_z

from conftest import assert_close, random_tree


def unary_weighted(values, companions):
    g = FactorGraph(
        [VariableDecl("x", len(values))],
        [FactorTable("f", ("x",), np.asarray(values, dtype=float))],
    )
    return WeightedGraph(g, [None if companions is None else np.asarray(companions)])


class TestLiftGraph:
    def test_elementwise_lift(self):
        wg = lift_graph(
            [
                WeightedFactor(
                    FactorTable("f", ("x",), np.array([0.5, 0.5])),
                    np.array([-1.0, -1.0]),
                )
            ],
            [VariableDecl("x", 2)],
        )
        from fginfer import ENTROPY

        scores, aux = wg.carrier_tables(ENTROPY)[0]
        assert scores == [0.5, 0.5]
        assert aux == [-0.5, -0.5]

    def test_zero_absorbs_undefined_companion(self):
        wg = lift_graph(
            [
                WeightedFactor(
                    FactorTable("f", ("x",), np.array([0.0, 1.0])),
                    np.array([-math.inf, 0.0]),
                )
            ],
            [VariableDecl("x", 2)],
        )
        from fginfer import ENTROPY

        scores, aux = wg.carrier_tables(ENTROPY)[0]
        assert (scores[0], aux[0]) == (0.0, 0.0)
        assert (scores[1], aux[1]) == (1.0, 0.0)

    def test_two_unary_factors_product(self):
        # hand product on a cardinality-2 domain: totals multiply pairwise
        g = FactorGraph(
            [VariableDecl("x", 2)],
            [
                FactorTable("a", ("x",), np.array([0.5, 0.5])),
                FactorTable("b", ("x",), np.array([0.4, 0.6])),
            ],
        )
        wg = WeightedGraph(g, [np.array([1.0, 1.0]), np.array([2.0, 2.0])])
        res = compute_zh(wg)
        # per value: f = 0.2 / 0.3; aux = f*(g_a+g_b) = 0.6 / 0.9
        assert_close(res.Z, 0.5)
        assert_close(res.H, 1.5)

    def test_companion_length_mismatch(self):
        with pytest.raises(ValueError):
            unary_weighted([0.5, 0.5], [1.0])

    def test_nonfinite_companion_under_nonzero_value(self):
        with pytest.raises(ValueError):
            unary_weighted([0.5, 0.5], [math.nan, 0.0])


class TestComputeZH:
    def test_uniform_binary(self):
        wg = unary_weighted([0.5, 0.5], np.log2([0.5, 0.5]))
        res = compute_zh(wg)
        assert res.Z == 1.0
        assert res.H == -1.0
        assert res.log_scale == 0.0

    def test_deterministic_zero_convention(self):
        wg = unary_weighted([1.0, 0.0], [0.0, None])
        res = compute_zh(unary_weighted([1.0, 0.0], None))
        assert (res.Z, res.H) == (1.0, 0.0)

    def test_three_chain_matches_oracle(self, rng):
        for _ in range(10):
            vals = [rng.uniform(0.05, 2.0, n) for n in (2, 4, 4)]
            g = FactorGraph(
                [VariableDecl(v, 2) for v in ("x1", "x2", "x3")],
                [
                    FactorTable("f1", ("x1",), vals[0]),
                    FactorTable("f2", ("x1", "x2"), vals[1]),
                    FactorTable("f3", ("x2", "x3"), vals[2]),
                ],
            )
            companions = [np.log2(v) for v in vals]
            res = compute_zh(WeightedGraph(g, companions))
            assert_close(res.Z, enumerate_z(g), what="Z")
            assert_close(res.H, enumerate_h(g, companions), what="H")

    def test_random_trees_match_oracle(self, rng):
        for _ in range(20):
            g, companions = random_tree(rng)
            res = compute_zh(WeightedGraph(g, companions))
            assert_close(res.Z, enumerate_z(g), what="Z")
            assert_close(res.H, enumerate_h(g, companions), what="H")


class TestPosteriorEntropy:
    def test_uniform_is_one_bit(self):
        wg = unary_weighted([0.5, 0.5], np.log2([0.5, 0.5]))
        assert posterior_entropy(wg).entropy_bits == 1.0

    def test_deterministic_is_zero(self):
        res = posterior_entropy(unary_weighted([1.0, 0.0], [0.0, None]))
        assert res.entropy_bits == 0.0

    def test_unnormalized_uniform_still_one_bit(self):
        # Z = 0.4; -H/Z and log2 Z shifts cancel
        wg = unary_weighted([0.2, 0.2], np.log2([0.2, 0.2]))
        assert_close(posterior_entropy(wg).entropy_bits, 1.0)

    def test_zero_evidence(self):
        wg = unary_weighted([0.0, 0.0], None)
        with pytest.raises(ZeroEvidence):
            posterior_entropy(wg)

    def test_matches_oracle_on_random_trees(self, rng):
        for _ in range(20):
            g, _ = random_tree(rng)
            wg = WeightedGraph(g, derive_log2_companions(g))
            res = posterior_entropy(wg)
            assert_close(res.entropy_bits, enumerate_entropy(g), what="entropy")

    def test_entropy_range(self, rng):
        for _ in range(20):
            g, _ = random_tree(rng)
            bits = posterior_entropy(
                WeightedGraph(g, derive_log2_companions(g))
            ).entropy_bits
            upper = sum(math.log2(v.cardinality) for v in g.variables)
            assert -0.0 <= bits <= upper + 1e-9

    def test_scale_invariance_generic_h(self, rng):
        # scaling one factor by c, keeping the ORIGINAL g: Z and H both
        # scale by c, the ratio H/Z stays put
        for c in (1e-6, 1e6):
            g, _ = random_tree(rng, max_vars=6)
            companions = derive_log2_companions(g)
            base = compute_zh(WeightedGraph(g, companions))
            scaled_factors = [
                FactorTable(f.id, f.scope, f.values * (c if i == 0 else 1.0))
                for i, f in enumerate(g.factors)
            ]
            g2 = FactorGraph(g.variables, scaled_factors)
            scaled = compute_zh(WeightedGraph(g2, companions))
            assert_close(scaled.Z, c * base.Z, what="Z scaling")
            assert_close(scaled.H, c * base.H, what="H scaling")
            assert_close(scaled.H / scaled.Z, base.H / base.Z, what="H/Z")

    def test_scale_invariance_posterior(self, rng):
        # recompute g = log2 of the SCALED factor: reported entropy moves
        # by at most 1e-6 bits
        for c in (1e-6, 1e6):
            g, _ = random_tree(rng, max_vars=6)
            base = posterior_entropy(WeightedGraph(g, derive_log2_companions(g)))
            scaled_factors = [
                FactorTable(f.id, f.scope, f.values * (c if i == 0 else 1.0))
                for i, f in enumerate(g.factors)
            ]
            g2 = FactorGraph(g.variables, scaled_factors)
            scaled = posterior_entropy(WeightedGraph(g2, derive_log2_companions(g2)))
            assert abs(scaled.entropy_bits - base.entropy_bits) <= 1e-6

    def test_tiny_negative_clamped(self):
        # single spike: exact entropy 0; cancellation may go slightly
        # negative and must be clamped, never reported below zero
        wg = unary_weighted([0.3, 0.0], None)
        wg2 = WeightedGraph(wg.graph, derive_log2_companions(wg.graph))
        res = posterior_entropy(wg2)
        assert res.entropy_bits == 0.0

    def test_rescaled_run_same_entropy(self, rng):
        for _ in range(10):
            g, _ = random_tree(rng)
            wg = WeightedGraph(g, derive_log2_companions(g))
            plain = posterior_entropy(wg)
            scaled = posterior_entropy(wg, rescale=True)
            assert_close(scaled.entropy_bits, plain.entropy_bits, what="bits")


class TestBaseConversion:
    def test_base_two_identity(self):
        assert entropy_in_base(5.0, "2") == 5.0

    def test_base_e(self):
        assert_close(entropy_in_base(5.0, "e"), 5.0 * math.log(2.0))

    def test_unknown_base(self):
        with pytest.raises(ValueError):
            entropy_in_base(1.0, "10")


class TestDeriveCompanions:
    def test_log2_of_values(self):
        g = FactorGraph(
            [VariableDecl("x", 2)], [FactorTable("f", ("x",), np.array([4.0, 0.0]))]
        )
        comp = derive_log2_companions(g)
        assert comp[0][0] == 2.0
        assert comp[0][1] == 0.0  # placeholder under a zero value

    def test_negative_value_rejected(self):
        g = FactorGraph(
            [VariableDecl("x", 2)], [FactorTable("f", ("x",), np.array([-1.0, 1.0]))]
        )
        with pytest.raises(OutOfDomain):
            derive_log2_companions(g)
