"""Memory: STM replace semantics, chain grouping, similarity, retrieval."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bluewall.attack import AttackEvent
from bluewall.memory import (AttackChain, ChainPrediction, Hop, LongTermMemory,
                             ShortTermMemory, active_chain, chain_similarity,
                             ltm_from_json, ltm_record, ltm_to_json,
                             prediction_digest, reactive_retrieve, stm_update)
from bluewall.netmodel import UNREACHABLE


def ev(target, time, source=None, success=True, attacker=0):
    return AttackEvent(attacker=attacker, source=source, target=target,
                       success=success, time=time)


def chain(nodes, subnet="net", start=0, episode=0):
    return AttackChain(subnet=subnet,
                       hops=[Hop(target=n, time=start + i)
                             for i, n in enumerate(nodes)],
                       episode=episode)


class TestStm:
    def test_starts_empty(self):
        stm = ShortTermMemory()
        assert stm.prev_action is None and stm.prev_observation is None

    def test_update_fills_all_slots(self):
        stm = stm_update(ShortTermMemory(), "act", "obs", "digest")
        assert (stm.prev_action, stm.prev_observation,
                stm.current_state_digest) == ("act", "obs", "digest")

    def test_one_cycle_deep(self):
        stm = stm_update(ShortTermMemory(), "a1", "o1", "d1")
        stm = stm_update(stm, "a2", "o2", "d2")
        assert stm.prev_action == "a2" and stm.prev_observation == "o2"


SUBNET_OF = ["net"] * 10 + ["other"] * 10


class TestLtmRecord:
    def test_seed_chain(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(3, 1), SUBNET_OF)
        assert len(ltm.chains) == 1
        assert ltm.chains[0].node_sequence == (3,)

    def test_tail_extension(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(3, 1), SUBNET_OF)
        ltm_record(ltm, ev(4, 2, source=3), SUBNET_OF)
        assert len(ltm.chains) == 1
        assert ltm.chains[0].node_sequence == (3, 4)

    def test_disjoint_subnets_make_separate_chains(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(1, 1), SUBNET_OF)
        ltm_record(ltm, ev(11, 1), SUBNET_OF)
        assert len(ltm.chains) == 2
        assert {c.subnet for c in ltm.chains} == {"net", "other"}

    def test_cross_subnet_hop_opens_new_chain(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(9, 1), SUBNET_OF)
        # source in "net", target in "other": no same-subnet linkage
        ltm_record(ltm, ev(11, 2, source=9), SUBNET_OF)
        assert len(ltm.chains) == 2
        assert ltm.chains[1].subnet == "other"
        assert ltm.chains[1].prefix == ()

    def test_mid_chain_fork_shares_prefix(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(1, 1), SUBNET_OF)
        ltm_record(ltm, ev(2, 2, source=1), SUBNET_OF)
        ltm_record(ltm, ev(3, 3, source=2), SUBNET_OF)
        ltm_record(ltm, ev(5, 4, source=1), SUBNET_OF)
        assert len(ltm.chains) == 2
        fork = ltm.chains[1]
        assert fork.prefix == (Hop(1, 1),)
        assert fork.node_sequence == (1, 5)
        # conservation counts owned hops only
        assert ltm.owned_hop_count() == 4 == ltm.events_recorded

    def test_external_source_never_links(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(1, 1), SUBNET_OF)
        ltm_record(ltm, ev(1, 5), SUBNET_OF)
        assert len(ltm.chains) == 2

    def test_failure_rejected(self):
        with pytest.raises(ValueError):
            ltm_record(LongTermMemory(), ev(1, 1, success=False), SUBNET_OF)

    def test_same_step_double_launch_from_one_foothold(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(1, 1), SUBNET_OF)
        ltm_record(ltm, ev(2, 2, source=1), SUBNET_OF)
        ltm_record(ltm, ev(3, 2, source=1), SUBNET_OF)
        assert len(ltm.chains) == 2
        assert ltm.chains[0].node_sequence == (1, 2)
        assert ltm.chains[1].node_sequence == (1, 3)
        for c in ltm.chains:
            c.check()

    def test_replay_is_deterministic(self):
        events = [ev(1, 1), ev(2, 2, source=1), ev(11, 2), ev(3, 3, source=2),
                  ev(12, 4, source=11), ev(5, 5, source=1), ev(4, 6, source=3)]
        snapshots = []
        for _ in range(2):
            ltm = LongTermMemory()
            for e in events:
                ltm_record(ltm, e, SUBNET_OF)
            snapshots.append(ltm_to_json(ltm))
        assert snapshots[0] == snapshots[1]

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 19),
                              st.one_of(st.none(), st.integers(0, 19))),
                    max_size=25))
    def test_conservation_and_monotone_times(self, stream):
        ltm = LongTermMemory()
        for t, (target, source) in enumerate(stream):
            ltm_record(ltm, ev(target, t + 1, source=source), SUBNET_OF)
        assert ltm.owned_hop_count() == len(stream)
        for c in ltm.chains:
            c.check()
            assert all(SUBNET_OF[h.target] == c.subnet for h in c.hops)


class TestSimilarity:
    def test_identical(self):
        assert chain_similarity(chain([1, 2, 3]), chain([1, 2, 3])) == 1.0

    def test_disjoint_same_subnet(self):
        assert chain_similarity(chain([1, 2]), chain([3, 4])) == 0.0

    def test_two_thirds(self):
        assert chain_similarity(chain([1, 2, 3]),
                                chain([1, 2, 4])) == pytest.approx(2 / 3)

    def test_cross_subnet_zero(self):
        assert chain_similarity(chain([1, 2]), chain([1, 2], subnet="other")) == 0.0

    def brute_lcs(self, a, b):
        best = 0
        for r in range(len(a) + 1):
            for combo in itertools.combinations(range(len(a)), r):
                sub = [a[i] for i in combo]
                it = iter(b)
                if all(x in it for x in sub):
                    best = max(best, len(sub))
        return best

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.integers(0, 5), min_size=1, max_size=7),
           st.lists(st.integers(0, 5), min_size=1, max_size=7))
    def test_matches_brute_force_lcs(self, a, b):
        expected = self.brute_lcs(a, b) / max(len(a), len(b))
        ca = AttackChain(subnet="net", hops=[Hop(n, i) for i, n in enumerate(a)])
        cb = AttackChain(subnet="net", hops=[Hop(n, i) for i, n in enumerate(b)])
        assert chain_similarity(ca, cb) == pytest.approx(expected)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 5), min_size=1, max_size=7),
           st.lists(st.integers(0, 5), min_size=1, max_size=7))
    def test_symmetric_and_bounded(self, a, b):
        ca = AttackChain(subnet="net", hops=[Hop(n, i) for i, n in enumerate(a)])
        cb = AttackChain(subnet="net", hops=[Hop(n, i) for i, n in enumerate(b)])
        s = chain_similarity(ca, cb)
        assert 0.0 <= s <= 1.0
        assert s == chain_similarity(cb, ca)
        assert (s == 1.0) == (tuple(a) == tuple(b))


class TestReactiveRetrieve:
    def store(self, *chains_):
        ltm = LongTermMemory()
        ltm.chains.extend(chains_)
        return ltm

    def test_at_threshold_empty(self):
        ltm = self.store(chain([1, 2, 3, 4]))
        pred = reactive_retrieve(ltm, chain([1, 2, 3]), critical_distance=3, theta=3)
        assert pred.empty

    def test_below_threshold_fires(self):
        ltm = self.store(chain([1, 2, 3, 4]))
        pred = reactive_retrieve(ltm, chain([1, 2, 3]), critical_distance=2, theta=3)
        assert pred.predicted_next_nodes == (4,)
        assert pred.match_score == pytest.approx(3 / 4)

    def test_unreachable_never_fires(self):
        ltm = self.store(chain([1, 2, 3, 4]))
        pred = reactive_retrieve(ltm, chain([1, 2, 3]),
                                 critical_distance=UNREACHABLE, theta=3)
        assert pred.empty

    def test_empty_ltm_empty_prediction(self):
        pred = reactive_retrieve(LongTermMemory(), chain([1, 2]),
                                 critical_distance=1, theta=3)
        assert pred.empty

    def test_weighted_vote_prefers_stronger_match(self):
        current = chain([1, 2, 3])
        strong = chain([1, 2, 3, 7])     # similarity 3/4, continues to 7
        weak = chain([1, 8, 9])          # similarity 1/3, continues to 8 after node 1
        pred = reactive_retrieve(self.store(strong, weak), current,
                                 critical_distance=1, theta=3, k=2)
        assert pred.predicted_next_nodes[0] == 7

    def test_top_k_limits_candidates(self):
        current = chain([1, 2, 3])
        best = chain([1, 2, 3, 7])
        mid = chain([1, 2, 6])
        worst = chain([1, 9, 9])
        pred = reactive_retrieve(self.store(best, mid, worst), current,
                                 critical_distance=0, theta=3, k=1)
        assert pred.predicted_next_nodes == (7,)
        assert pred.source_chains == (0,)

    def test_min_score_filter(self):
        current = chain([1, 2, 3])
        weak = chain([1, 8, 9])
        pred = reactive_retrieve(self.store(weak), current, critical_distance=1,
                                 theta=3, min_score=0.5)
        assert pred.empty

    def test_boundary_property(self):
        ltm = self.store(chain([1, 2, 3, 4]))
        for distance in range(0, 7):
            pred = reactive_retrieve(ltm, chain([1, 2, 3]),
                                     critical_distance=distance, theta=3)
            assert pred.empty == (distance >= 3)

    def test_current_chain_excluded_from_store(self):
        cur = chain([1, 2, 3])
        other = chain([1, 2, 4])
        pred = reactive_retrieve(self.store(cur, other), cur,
                                 critical_distance=1, theta=3, k=1)
        assert pred.predicted_next_nodes == (4,)

    def test_digest_rendering(self):
        assert prediction_digest(ChainPrediction()) == ""
        pred = ChainPrediction(predicted_next_nodes=(7, 9), source_chains=(0,),
                               match_score=0.75)
        text = prediction_digest(pred)
        assert "node 7" in text and "node 9" in text


class TestPersistence:
    def test_json_round_trip(self):
        ltm = LongTermMemory()
        for e in [ev(1, 1), ev(2, 2, source=1), ev(5, 3, source=1), ev(11, 4)]:
            ltm_record(ltm, e, SUBNET_OF)
        ltm.mark_episode_boundary()
        back = ltm_from_json(ltm_to_json(ltm))
        assert ltm_to_json(back) == ltm_to_json(ltm)
        assert back.episode == ltm.episode
        assert back.owned_hop_count() == ltm.owned_hop_count()

    def test_active_chain_is_most_recent(self):
        ltm = LongTermMemory()
        ltm_record(ltm, ev(1, 1), SUBNET_OF)
        ltm_record(ltm, ev(11, 2), SUBNET_OF)
        assert active_chain(ltm).node_sequence == (11,)
        assert active_chain(LongTermMemory()) is None
