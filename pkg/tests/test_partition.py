
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_graph
from diteration.graph import Graph
from diteration.partition import (Partition, adapt_boundary, cost_balanced_from_costs,
                                  cost_balanced_partition, node_costs, uniform_partition)


@pytest.mark.parametrize("n,k,expected", [
    (10, 2, (0, 5, 10)),
    (10, 3, (0, 4, 7, 10)),
    (5, 5, (0, 1, 2, 3, 4, 5)),
    (7, 1, (0, 7)),
])
def test_uniform_examples(n, k, expected):
    assert uniform_partition(n, k).boundaries == expected


def test_uniform_rejects_too_many_parts():
    with pytest.raises(ValueError):
        uniform_partition(3, 4)
    with pytest.raises(ValueError):
        uniform_partition(3, 0)


def test_partition_validation_and_owner():
    with pytest.raises(ValueError):
        Partition((0, 3, 3, 5))
    with pytest.raises(ValueError):
        Partition((1, 5))
    p = Partition((0, 4, 7, 10))
    assert p.owner(np.array([0, 3, 4, 6, 7, 9])).tolist() == [0, 0, 1, 1, 2, 2]
    assert p.sizes() == [4, 3, 3]
    assert p.csv().splitlines() == ["part,start,end", "0,0,4", "1,4,7", "2,7,10"]


def _greedy_by_enumeration(costs):
    """Stated greedy rule for K=2, evaluated over every contiguous split."""
    target = -(-sum(costs) // 2)
    for w in range(1, len(costs)):
        if sum(costs[:w]) >= target:
            return w
    return len(costs) - 1


def test_cb_two_parts_example():
    costs = [4, 4, 1, 1, 1, 1]
    splits = {w: (sum(costs[:w]), sum(costs[w:])) for w in range(1, 6)}
    optimum = min(splits, key=lambda w: max(splits[w]))
    assert _greedy_by_enumeration(costs) == 2
    assert cost_balanced_from_costs(costs, 2).boundaries == (0, 2, 6)
    # recorded optimum: splits w=1 and w=2 both reach the min-max cost 8
    assert max(splits[optimum]) == max(splits[2]) == 8


def test_cb_from_graph_counts_dangling_as_one():
    g = Graph.from_edges(6, [0] * 4 + [1] * 4, [1, 2, 3, 4, 2, 3, 4, 5])
    assert node_costs(g).tolist() == [4, 4, 1, 1, 1, 1]
    assert cost_balanced_partition(g, 2).boundaries == (0, 2, 6)


def test_cb_equal_degrees_is_uniform():
    n = 37
    src = np.repeat(np.arange(n), 3)
    dst = (src + np.tile([1, 2, 3], n)) % n
    g = Graph.from_edges(n, src, dst)
    for k in (1, 2, 3, 5, 8, 37):
        assert cost_balanced_partition(g, k) == uniform_partition(n, k)


@settings(max_examples=100, deadline=None)
@given(costs=st.lists(st.integers(1, 50), min_size=1, max_size=60), data=st.data())
def test_cb_properties(costs, data):
    k = data.draw(st.integers(1, len(costs)))
    p = cost_balanced_from_costs(costs, k)
    assert p.k == k and p.n == len(costs)
    assert all(s >= 1 for s in p.sizes())
    prefix = np.concatenate(([0], np.cumsum(costs)))
    part_costs = [prefix[b] - prefix[a] for a, b in zip(p.boundaries, p.boundaries[1:])]
    assert max(part_costs) <= sum(costs) / k + max(costs)


def test_cb_bound_on_random_graph():
    g = random_graph(2000, 8, 0.1, seed=4)
    c = node_costs(g)
    for k in (2, 4, 16, 64):
        p = cost_balanced_partition(g, k)
        worst = max(c[a:b].sum() for a, b in zip(p.boundaries, p.boundaries[1:]))
        assert worst <= (g.edge_count + int(g.dangling.sum())) / k + c.max()


def test_adapt_shrinks_busy_part():
    p = Partition((0, 50000, 100000))
    assert adapt_boundary(p, (0.4, 0.1), (1.5, 1.0)).boundaries == (0, 45000, 100000)
    assert adapt_boundary(p, (0.1, 0.4), (1.0, 1.5)).boundaries == (0, 55000, 100000)


def test_adapt_requires_both_triggers():
    p = Partition((0, 50000, 100000))
    assert adapt_boundary(p, (0.15, 0.1), (1.5, 1.0)) is p
    assert adapt_boundary(p, (0.4, 0.1), (1.1, 1.0)) is p
    # exactly at the triggers: strict inequalities
    assert adapt_boundary(p, (0.2, 0.1), (1.2, 1.0)) is p


def test_adapt_clamped():
    p = Partition((0, 1, 3))
    assert adapt_boundary(p, (1.0, 0.1), (2.0, 1.0)) is p
    p = Partition((0, 9, 10))
    # 10% of 9 rounds to 1 and the move would empty part 2
    assert adapt_boundary(p, (0.1, 1.0), (1.0, 2.0)) is p
    p = Partition((0, 20, 21))
    assert adapt_boundary(p, (0.1, 1.0), (1.0, 2.0)).boundaries == (0, 20, 21)


def test_adapt_unsupported_k():
    with pytest.raises(NotImplementedError):
        adapt_boundary(uniform_partition(9, 3), (1, 1, 1), (1, 1, 1))


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 1000), w=st.integers(1, 999), r=st.tuples(st.floats(0, 1), st.floats(0, 1)),
       o=st.tuples(st.floats(0, 5), st.floats(0, 5)))
def test_adapt_keeps_cover(n, w, r, o):
    p = Partition((0, min(w, n - 1), n))
    q = adapt_boundary(p, r, o)
    assert q.boundaries[0] == 0 and q.boundaries[-1] == n
    assert 1 <= q.boundaries[1] <= n - 1
    assert adapt_boundary(p, r, o) == q
