import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uspanner.metric import is_s_well_separated
from uspanner.orders import PairOrder
from uspanner.wspd import (Wspd, build_greedy_wspd, make_pair, pair_covers, verify_wspd)

from conftest import line, random_metric


def brute_greedy(points, s, order):
    """Direct transcription of the greedy loop over 1-d points, pure Python."""
    covered = set()
    out = []
    for p, q in order:
        if frozenset((p, q)) in covered:
            continue
        r = abs(points[p] - points[q]) / (2 + 2 * s)
        a = [i for i, x in enumerate(points) if abs(x - points[p]) <= r]
        b = [i for i, x in enumerate(points) if abs(x - points[q]) <= r]
        out.append((p, q, a, b))
        covered |= {frozenset((x, y)) for x in a for y in b}
    return out


def all_orders(n):
    pairs = list(itertools.combinations(range(n), 2))
    return [PairOrder.explicit(perm) for perm in itertools.permutations(pairs)]


def test_two_points_single_pair():
    w = build_greedy_wspd(line(0, 3), 2.0)
    assert len(w) == 1
    assert w.pairs[0].members_a.tolist() == [0] and w.pairs[0].members_b.tolist() == [1]


def test_collinear_three_every_order():
    pts = [0.0, 1.0, 2.0]
    m = line(*pts)
    for order in all_orders(3):
        expect = brute_greedy(pts, 2.0, order.pairs)
        assert len(expect) == 3
        w = build_greedy_wspd(m, 2.0, order)
        assert [(p.center_a, p.center_b, p.members_a.tolist(), p.members_b.tolist())
                for p in w.pairs] == expect
        assert all(p.size() == 2 for p in w.pairs)


def test_two_clusters_every_order():
    # s > 1 is required, so the four-point line runs at s = 2 (same ball structure as s = 1)
    pts = [0.0, 1.0, 10.0, 11.0]
    m = line(*pts)
    counts = set()
    for order in all_orders(4):
        expect = brute_greedy(pts, 2.0, order.pairs)
        w = build_greedy_wspd(m, 2.0, order)
        assert [(p.center_a, p.center_b) for p in w.pairs] == [(e[0], e[1]) for e in expect]
        counts.add(len(w))
        sizes = sorted(p.size() for p in w.pairs)
        assert sizes == [2, 2, 4]
    assert counts == {3}


def test_pair_covers_examples():
    m = line(0, 1, 10, 11)
    pr = make_pair(m, 0, 2, 1.0, 0)
    assert pr.radius == 2.5
    assert pr.members_a.tolist() == [0, 1] and pr.members_b.tolist() == [2, 3]
    assert pair_covers(pr, 0, 2)
    assert pair_covers(pr, 1, 3) and pair_covers(pr, 3, 1)
    assert not pair_covers(pr, 0, 1)
    assert not pair_covers(pr, 0, 0)


@pytest.mark.parametrize("s", [1.0, 0.5, -2.0])
def test_rejects_small_s(s):
    with pytest.raises(ValueError):
        build_greedy_wspd(line(0, 1), s)


def test_verify_reports_uncovered_after_removal(rand100):
    w = build_greedy_wspd(rand100, 2.0, PairOrder("random", 3))
    assert verify_wspd(rand100, w).ok
    big = max(w.pairs, key=lambda p: p.size())
    rep = verify_wspd(rand100, w.without(big.seq))
    # pairs covered only by the removed pair
    others = np.zeros((100, 100), dtype=bool)
    for p in w.pairs:
        if p.seq != big.seq:
            others[np.ix_(p.members_a, p.members_b)] = True
            others[np.ix_(p.members_b, p.members_a)] = True
    expect = sorted({(min(x, y), max(x, y)) for x in big.members_a.tolist()
                     for y in big.members_b.tolist() if not others[x, y]})
    assert rep.uncovered == expect and rep.uncovered
    assert not rep.not_separated


def test_verify_empty_wspd():
    rep = verify_wspd(line(0, 1), Wspd(2.0))
    assert rep.uncovered == [(0, 1)]
    assert not rep.ok


def test_verify_flags_non_separated_pair():
    m = line(0, 1, 2, 10)
    w = Wspd(2.0, [make_pair(m, 0, 3, 2.0, 0)])
    bad = Wspd(2.0, [w.pairs[0].__class__(0, 3, 5.0, np.array([0, 1, 2]), np.array([2, 3]), 0)])
    assert verify_wspd(m, bad).not_separated == [0]


@pytest.mark.parametrize("s", [2.0, 3.0, 5.0])
@pytest.mark.parametrize("seed", range(10))
def test_random_builds_verify_clean(s, seed):
    m = random_metric(200, seed)
    w = build_greedy_wspd(m, s, PairOrder("random", seed))
    rep = verify_wspd(m, w)
    assert rep.ok, rep.to_json()
    assert len(w) <= 200 * 199 // 2


def test_replay_generating_pair_uncovered_at_emission():
    m = random_metric(40, 12)
    w = build_greedy_wspd(m, 2.0, PairOrder("random", 11))
    seen = []
    for pr in w.pairs:
        assert not any(pair_covers(old, pr.center_a, pr.center_b) for old in seen)
        seen.append(pr)


def test_huge_s_gives_all_singletons():
    m = random_metric(20, 4)
    w = build_greedy_wspd(m, 1e9, PairOrder("lexicographic"))
    assert len(w) == 20 * 19 // 2
    assert all(p.size() == 2 for p in w.pairs)


def test_pair_invariants(rand100):
    w = build_greedy_wspd(rand100, 3.0)
    for pr in w.pairs:
        assert pr.center_a in pr.members_a and pr.center_b in pr.members_b
        assert np.all(rand100.dist[pr.center_a, pr.members_a] <= pr.radius)
        assert np.all(rand100.dist[pr.center_b, pr.members_b] <= pr.radius)
        assert is_s_well_separated(rand100, pr.members_a, pr.members_b, 3.0)


def test_json_roundtrip(rand100, tmp_path):
    w = build_greedy_wspd(rand100, 2.0)
    w.save(tmp_path / "w.json")
    import json
    back = Wspd.from_json(json.loads((tmp_path / "w.json").read_text()))
    assert [p.to_json() for p in back.pairs] == [p.to_json() for p in w.pairs]
    assert set(json.loads((tmp_path / "w.json").read_text())["pairs"][0]) == {"seq", "a", "b", "r", "A", "B"}


@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_adversarial_orders_verify(data):
    n = data.draw(st.integers(3, 14))
    seed = data.draw(st.integers(0, 10_000))
    s = data.draw(st.sampled_from([1.5, 2.0, 4.0]))
    m = random_metric(n, seed)
    pairs = list(itertools.combinations(range(n), 2))
    perm = data.draw(st.permutations(pairs))
    flips = data.draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    order = PairOrder.explicit([(b, a) if f else (a, b) for (a, b), f in zip(perm, flips)])
    assert verify_wspd(m, build_greedy_wspd(m, s, order)).ok


def test_order_robust_size():
    m = random_metric(150, 5)
    sizes = [len(build_greedy_wspd(m, 2.0, PairOrder(strat, seed)))
             for strat in ("random", "lexicographic", "reverse-lexicographic",
                           "increasing-distance", "decreasing-distance")
             for seed in range(2)]
    # observed spread across orders stays well inside a factor of 2
    assert max(sizes) / min(sizes) < 2.0
