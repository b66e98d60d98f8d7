import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fginfer import (
    CycleDetected,
    FactorGraph,
    FactorTable,
    OutOfDomain,
    ScopeMismatch,
    UncoveredVariable,
    UnknownVariable,
    VariableDecl,
    assignment_from_index,
    assignment_index,
    make_schedule,
    validate,
)

from conftest import random_tree


def binary_vars(*names):
    return [VariableDecl(n, 2) for n in names]


def ones_factor(fid, scope, cards=None):
    size = int(np.prod(cards or [2] * len(scope)))
    return FactorTable(fid, tuple(scope), np.ones(size))


def star_tree_graph():
    """Five binary variables; factors A(x1), B(x2), C(x1,x2,x3), D(x1,x4),
    E(x2,x5). A 10-node tree with 9 edges."""
    return FactorGraph(
        binary_vars("x1", "x2", "x3", "x4", "x5"),
        [
            ones_factor("A", ["x1"]),
            ones_factor("B", ["x2"]),
            ones_factor("C", ["x1", "x2", "x3"]),
            ones_factor("D", ["x1", "x4"]),
            ones_factor("E", ["x2", "x5"]),
        ],
    )


class TestValidate:
    def test_star_tree_is_valid(self):
        g = validate(star_tree_graph())
        assert len(g.variables) == 5
        assert len(g.factors) == 5
        assert g.n_edges == 9

    def test_smallest_tree(self):
        g = validate(FactorGraph(binary_vars("x"), [ones_factor("f", ["x"])]))
        assert g.n_edges == 1

    def test_parallel_factors_cycle(self):
        g = FactorGraph(
            binary_vars("x1", "x2"),
            [ones_factor("f", ["x1", "x2"]), ones_factor("h", ["x1", "x2"])],
        )
        with pytest.raises(CycleDetected):
            validate(g)

    def test_triangle_cycle(self):
        g = FactorGraph(
            binary_vars("a", "b", "c"),
            [
                ones_factor("fab", ["a", "b"]),
                ones_factor("fbc", ["b", "c"]),
                ones_factor("fca", ["c", "a"]),
            ],
        )
        with pytest.raises(CycleDetected):
            validate(g)

    def test_unknown_scope_variable(self):
        g = FactorGraph(binary_vars("x"), [ones_factor("f", ["x", "ghost"])])
        with pytest.raises(UnknownVariable):
            validate(g)

    def test_uncovered_variable(self):
        g = FactorGraph(binary_vars("x", "lonely"), [ones_factor("f", ["x"])])
        with pytest.raises(UncoveredVariable):
            validate(g)

    def test_table_length_mismatch(self):
        g = FactorGraph(
            binary_vars("x"), [FactorTable("f", ("x",), np.ones(3))]
        )
        with pytest.raises(ScopeMismatch):
            validate(g)

    def test_repeated_scope_variable_rejected_at_construction(self):
        with pytest.raises(ScopeMismatch):
            FactorTable("f", ("x", "x"), np.ones(4))

    def test_forest_accepted(self):
        g = FactorGraph(
            binary_vars("a", "b"),
            [ones_factor("fa", ["a"]), ones_factor("fb", ["b"])],
        )
        assert validate(g).n_edges == 2

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            FactorGraph(binary_vars("x", "x"), [ones_factor("f", ["x"])])
        with pytest.raises(ValueError):
            FactorGraph(
                binary_vars("x"), [ones_factor("f", ["x"]), ones_factor("f", ["x"])]
            )

    def test_cardinality_must_be_positive(self):
        with pytest.raises(ValueError):
            VariableDecl("x", 0)

    def test_edge_count_is_nodes_minus_components(self):
        # tree/forest criterion on a batch of random instances
        rng = np.random.default_rng(29)
        for _ in range(25):
            g, _ = random_tree(rng, max_vars=8)
            validate(g)
            # count components by union of scopes
            comp = {v.id: v.id for v in g.variables}

            def find(x):
                while comp[x] != x:
                    comp[x] = comp[comp[x]]
                    x = comp[x]
                return x

            for f in g.factors:
                anchor = find(f.scope[0])
                for vid in f.scope[1:]:
                    comp[find(vid)] = anchor
            # every factor has a nonempty scope, so variable components
            # under scope-sharing are exactly the bipartite components
            n_components = len({find(v.id) for v in g.variables})
            n_nodes = len(g.variables) + len(g.factors)
            assert g.n_edges == n_nodes - n_components


class TestSchedule:
    def test_chain_one_pass_ends_at_root(self):
        g = FactorGraph(
            binary_vars("x1", "x2", "x3"),
            [
                ones_factor("f12", ["x1", "x2"]),
                ones_factor("f23", ["x2", "x3"]),
            ],
        )
        sched = make_schedule(validate(g), root="x3")
        assert len(sched.edges) == 4
        to_factor, var_i, fac_i = sched.edges[-1]
        assert not to_factor
        assert g.variables[var_i].id == "x3"
        assert g.factors[fac_i].id == "f23"

    def test_single_pair_schedule(self):
        g = validate(FactorGraph(binary_vars("x"), [ones_factor("f", ["x"])]))
        sched = make_schedule(g, root="x")
        assert len(sched.edges) == 1
        to_factor, var_i, fac_i = sched.edges[0]
        assert not to_factor  # factor -> variable

    def test_star_tree_two_pass_counts(self):
        g = validate(star_tree_graph())
        sched = make_schedule(g, root="x3", two_pass=True)
        assert len(sched.edges) == 2 * g.n_edges == 18
        assert len(set(sched.edges)) == 18  # each directed edge once

    def test_dependencies_respected(self):
        # replay the schedule: an edge may fire only when all feeds are done
        rng = np.random.default_rng(31)
        for _ in range(20):
            g, _ = random_tree(rng, max_vars=9)
            validate(g)
            for two_pass in (False, True):
                sched = make_schedule(g, two_pass=two_pass)
                have_q = set()
                have_r = set()
                for to_factor, vi, fi in sched.edges:
                    if to_factor:
                        feeds = [f for f in g.var_factors[vi] if f != fi]
                        assert all((f, vi) in have_r for f in feeds)
                        have_q.add((vi, fi))
                    else:
                        feeds = [v for v in g.factor_vars[fi] if v != vi]
                        assert all((v, fi) in have_q for v in feeds)
                        have_r.add((fi, vi))

    def test_unknown_root(self):
        g = validate(star_tree_graph())
        with pytest.raises(UnknownVariable):
            make_schedule(g, root="nope")


class TestAssignmentIndex:
    def test_mixed_radix_examples(self):
        assert assignment_index([2, 3], (1, 2)) == 5
        assert assignment_index([2, 3], (0, 0)) == 0
        assert assignment_index([4], (3,)) == 3

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            assignment_index([2, 3], (2, 0))
        with pytest.raises(OutOfDomain):
            assignment_index([2, 3], (0, -1))

    def test_first_position_most_significant(self):
        # incrementing the first digit jumps by the product of later cards
        assert assignment_index([3, 4, 5], (1, 0, 0)) == 20
        assert assignment_index([3, 4, 5], (0, 1, 0)) == 5
        assert assignment_index([3, 4, 5], (0, 0, 1)) == 1

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=5))
    def test_roundtrip_bijection(self, cards):
        total = int(np.prod(cards))
        if total > 10_000:
            return
        seen = set()
        for idx in range(total):
            a = assignment_from_index(cards, idx)
            assert assignment_index(cards, a) == idx
            seen.add(tuple(a))
        assert len(seen) == total
