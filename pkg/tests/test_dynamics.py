import random

import numpy as np
import pytest

from sandpiles import (NotRecurrentError, NotStableError, build_graph,
                       burning_sequence, chain_heights, chain_step,
                       dhar_recurrence_test, enumerate_recurrent,
                       first_phase_burns_rest, lattice_box, maximal_sandpile,
                       reduced_laplacian, sample_stationary, stabilize,
                       two_phase_burn, unburnt_after_first_phase,
                       zero_sandpile)

from helpers import stabilize_random_order


def test_stabilize_single_vertex():
    g = build_graph(["v", "s"], "s", [("v", "s", 2)])
    h, rep = stabilize(g, {"v": 3})
    assert h == {"v": 1}
    assert rep.odometer == {"v": 1}
    assert rep.lost_to_sink == 2


def test_stabilize_box3_center():
    g = lattice_box(3)
    h0 = zero_sandpile(g)
    h0[(1, 1)] = 4
    h, rep = stabilize(g, h0)
    assert h[(1, 1)] == 0
    for p in [(0, 1), (1, 0), (1, 2), (2, 1)]:
        assert h[p] == 1
    for p in [(0, 0), (0, 2), (2, 0), (2, 2)]:
        assert h[p] == 0
    assert rep.total_topplings() == 1 and rep.lost_to_sink == 0


def test_stabilize_rejects_negative():
    g = build_graph(["v", "s"], "s", [("v", "s", 2)])
    with pytest.raises(NotStableError):
        stabilize(g, {"v": -1})


def test_abelian_property_against_random_orders(suite):
    rng = random.Random(99)
    cases = 0
    while cases < 200:
        g = suite[rng.randrange(len(suite))]
        h0 = {v: rng.randrange(0, 2 * g.degree(v)) for v in g.sites}
        ours, rep = stabilize(g, h0)
        theirs, lost = stabilize_random_order(g, h0, rng)
        assert ours == theirs
        assert rep.lost_to_sink == lost
        cases += 1


def test_conservation_and_odometer_identity(suite):
    rng = random.Random(5)
    for g in suite[:25]:
        h0 = {v: rng.randrange(0, 3 * g.degree(v)) for v in g.sites}
        h, rep = stabilize(g, h0)
        assert sum(h0.values()) == sum(h.values()) + rep.lost_to_sink
        lap, sites = reduced_laplacian(g)
        odo = [rep.odometer[v] for v in sites]
        for i, v in enumerate(sites):
            drop = sum(lap[i][j] * odo[j] for j in range(len(sites)))
            assert h[v] == h0[v] - drop


def test_chain_step_single_vertex():
    g = build_graph(["v", "s"], "s", [("v", "s", 2)])
    rng = np.random.default_rng(0)
    assert chain_step(g, {"v": 1}, rng) == {"v": 0}
    assert chain_step(g, {"v": 0}, rng) == {"v": 1}


def test_recurrent_class_closed_under_chain(suite):
    rng = np.random.default_rng(21)
    for g in suite[:10]:
        h = maximal_sandpile(g)
        for _ in range(30):
            h = chain_step(g, h, rng)
            assert dhar_recurrence_test(g, h)


def test_burning_witness_is_valid_sequence(pair_graph):
    ok, seq = dhar_recurrence_test(pair_graph, {"x": 2, "y": 1},
                                   with_witness=True)
    assert ok
    burnt = {pair_graph.sink}
    h = {"x": 2, "y": 1}
    for v in seq:
        udeg = pair_graph.internal_degree(v, set(pair_graph.sites) - burnt)
        assert h[v] >= udeg
        burnt.add(v)
    assert burnt == set(pair_graph.vertices)


def test_pair_zero_zero_not_recurrent(pair_graph):
    assert not dhar_recurrence_test(pair_graph, {"x": 0, "y": 0})


def test_all_maximal_recurrent(suite):
    for g in suite[:15]:
        assert dhar_recurrence_test(g, maximal_sandpile(g))


def test_two_phase_with_empty_protected_matches_plain(box2):
    for h in enumerate_recurrent(box2)[:40]:
        r0 = two_phase_burn(box2, h)
        r1 = two_phase_burn(box2, h, protected=())
        assert r0.rounds1 == r1.rounds1
        assert not r0.rounds2


def test_two_phase_with_everything_protected(box2):
    h = maximal_sandpile(box2)
    plain = two_phase_burn(box2, h)
    r = two_phase_burn(box2, h, protected=box2.sites)
    assert r.rounds1 == ()
    assert r.unburnt_mid == frozenset(box2.sites)
    assert r.rounds2 == plain.rounds1


def test_two_phase_record_invariants(box2):
    protected = [(0, 0)]
    for h in enumerate_recurrent(box2)[:60]:
        r = two_phase_burn(box2, h, protected)
        seen = set()
        for rd in r.all_rounds():
            assert not (rd & seen)
            seen |= rd
        assert seen == set(box2.sites)
        for rd in r.rounds1:
            assert not (rd & set(protected))
        assert r.complete


def test_unburnt_core_of_maximal_is_protected_set(box2):
    h = maximal_sandpile(box2)
    q = [(1, 1), (0, 0)]
    assert unburnt_after_first_phase(box2, h, q) == frozenset(q)
    assert first_phase_burns_rest(box2, h, q)


def test_unburnt_core_requires_recurrent(pair_graph):
    with pytest.raises(NotRecurrentError):
        unburnt_after_first_phase(pair_graph, {"x": 0, "y": 0}, ["x"])


def test_unburnt_core_empty_protected(box2):
    for h in enumerate_recurrent(box2)[:20]:
        assert unburnt_after_first_phase(box2, h, ()) == frozenset()


def test_burning_sequence_orders_rounds(box2):
    h = maximal_sandpile(box2)
    r = two_phase_burn(box2, h)
    seq = burning_sequence(box2, r)
    assert sorted(seq) == sorted(box2.sites)


def test_sampler_deterministic(pair_graph):
    a = list(sample_stationary(pair_graph, seed=7, burn_in=50, thin=3, count=20))
    b = list(sample_stationary(pair_graph, seed=7, burn_in=50, thin=3, count=20))
    assert a == b
    c = list(sample_stationary(pair_graph, seed=8, burn_in=50, thin=3, count=20))
    assert a != c


def test_sampler_states_recurrent(pair_graph):
    for h in sample_stationary(pair_graph, seed=3, count=200):
        assert dhar_recurrence_test(pair_graph, h)


def test_sampler_states_recurrent_on_box():
    g = lattice_box(8)
    taken = list(sample_stationary(g, seed=11, burn_in=2000, thin=16, count=12))
    for h in taken:
        assert dhar_recurrence_test(g, h)


def test_chain_heights_matches_sampler(pair_graph):
    rows = chain_heights(pair_graph, ["x", "y"], seed=7, burn_in=50,
                         thin=3, count=20)
    states = list(sample_stationary(pair_graph, seed=7, burn_in=50,
                                    thin=3, count=20))
    assert [{ "x": int(r[0]), "y": int(r[1])} for r in rows] == states
