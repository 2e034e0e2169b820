import numpy as np
import pytest

from dfl.registry.table import (
    NoSuccessorError,
    PartitionTable,
    RegistryError,
    apply_leave,
    bootstrap,
    join,
    lookup,
    plan_leave,
)


def _joined(k, pi, rho, agents):
    table = bootstrap(k, pi, rho, 1)
    results = []
    for agent in range(2, agents + 1):
        result = join(table, agent)
        table = result.table
        results.append(result)
    return table, results


class TestJoin:
    def test_six_partitions_worked_example(self):
        table, results = _joined(6, 4, 2, 4)

        assert results[0].assigned == (3, 4, 5, 6)
        assert results[1].assigned == (1, 2, 5, 6)
        assert results[2].assigned == ()
        assert results[2].trainer_only
        assert table.held == {1: (1, 2, 3, 4), 2: (3, 4, 5, 6), 3: (1, 2, 5, 6)}
        assert all(table.replication(p) == 2 for p in range(1, 7))

    def test_first_joiner_relinquishes_then_co_holds(self):
        _, results = _joined(6, 4, 2, 2)

        transfers = [(t.partition, t.donor, t.relinquished) for t in results[0].transfers]
        assert transfers == [(6, 1, True), (5, 1, True), (4, 1, False), (3, 1, False)]

    def test_rho_one_splits_partitions(self):
        table, results = _joined(4, 2, 1, 2)

        assert results[0].assigned == (3, 4)
        assert table.held == {1: (1, 2), 2: (3, 4)}

    def test_trainer_only_join_leaves_table_unchanged(self):
        table, _ = _joined(6, 4, 2, 3)

        result = join(table, 4)

        assert result.table is table

    def test_storage_offer_below_pi_partitions_is_trainer_only(self):
        table = bootstrap(4, 1, 2, 1)

        result = join(table, 2, storage=0, partition_bytes=8)

        assert result.trainer_only
        assert result.table is table

    def test_storage_offer_of_pi_partitions_is_enough(self):
        result = join(bootstrap(4, 1, 2, 1), 2, storage=8, partition_bytes=8)

        assert result.assigned == (4,)

    def test_duplicate_join_is_rejected(self):
        with pytest.raises(RegistryError, match="already joined"):
            join(bootstrap(4, 1, 1, 1), 1)

    def test_random_join_sequences_keep_invariants(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            k = int(rng.integers(1, 12))
            pi = int(rng.integers(1, k + 1))
            rho = int(rng.integers(1, 5))
            table = bootstrap(k, pi, rho, 1)
            for agent in range(2, int(rng.integers(2, 12))):
                result = join(table, agent)
                assert result.trainer_only or len(result.assigned) == pi
                table = result.table
                table.check_invariants()
                assert all(table.replication(p) <= rho for p in range(1, k + 1))

    def test_random_interleaved_joins_and_leaves_keep_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            k = int(rng.integers(1, 65))
            pi = int(rng.integers(1, min(k, 8) + 1))
            rho = int(rng.integers(1, 6))
            table = bootstrap(k, pi, rho, 1)
            next_id = 2
            for _ in range(200):
                can_join = next_id <= 100
                can_leave = len(table.held) > 1
                if not (can_join or can_leave):
                    break
                if can_join and (not can_leave or rng.random() < 0.6):
                    result = join(table, next_id)
                    next_id += 1
                    assert result.trainer_only or len(result.assigned) == pi
                    table = result.table
                else:
                    leaver = int(rng.choice(table.agents))
                    sole = {p for p in table.held[leaver] if table.replication(p) == 1}
                    plan = plan_leave(table, leaver)
                    assert {r.partition for r in plan.reassignments} == sole
                    table = apply_leave(table, plan)
                    assert leaver not in table.held
                    assert all(table.holds(r.to_agent, r.partition) for r in plan.reassignments)
                table.check_invariants()
                assert all(1 <= table.replication(p) <= rho for p in range(1, k + 1))


class TestBootstrap:
    def test_initiator_holds_everything(self):
        table = bootstrap(6, 4, 2, 1)

        assert table.held == {1: (1, 2, 3, 4, 5, 6)}
        assert table.agents == (1,)
        table.check_invariants()

    @pytest.mark.parametrize("k,pi,rho", [(0, 1, 1), (3, 4, 1), (3, 0, 1), (3, 1, 0)])
    def test_rejects_bad_parameters(self, k, pi, rho):
        with pytest.raises(RegistryError):
            bootstrap(k, pi, rho, 1)


def test_lookup_returns_sorted_holders():
    table, _ = _joined(6, 4, 2, 3)

    assert lookup(table, 3) == (1, 2)
    assert lookup(table, 5) == (2, 3)


def test_lookup_unknown_partition():
    with pytest.raises(RegistryError, match="unknown partition 7"):
        lookup(bootstrap(6, 4, 2, 1), 7)


class TestLeave:
    def test_sole_holder_leaves_to_least_loaded(self):
        table, _ = _joined(4, 2, 1, 2)

        plan = plan_leave(table, 2)

        assert [(r.partition, r.to_agent) for r in plan.reassignments] == [(3, 1), (4, 1)]
        assert plan.recipients() == {1: (3, 4)}
        after = apply_leave(table, plan)
        assert after.held == {1: (1, 2, 3, 4)}

    def test_co_holder_leaving_needs_no_reassignment(self):
        table, _ = _joined(6, 4, 2, 3)

        plan = plan_leave(table, 1)

        assert plan.reassignments == ()
        after = apply_leave(table, plan)
        assert after.held == {2: (3, 4, 5, 6), 3: (1, 2, 5, 6)}
        assert after.holders[3] == (2,)

    def test_reassignments_spread_over_remaining_agents(self):
        table, _ = _joined(4, 1, 1, 3)
        # agent 1 keeps {1, 2}: agents 2 and 3 hold one partition each
        assert table.held[1] == (1, 2)

        plan = plan_leave(table, 1)

        assert [(r.partition, r.to_agent) for r in plan.reassignments] == [(1, 2), (2, 3)]

    def test_last_agent_has_no_successor(self):
        with pytest.raises(NoSuccessorError):
            plan_leave(bootstrap(3, 1, 1, 1), 1)

    def test_unknown_leaver(self):
        with pytest.raises(RegistryError, match="unknown agent 9"):
            plan_leave(bootstrap(3, 1, 1, 1), 9)


class TestCanonical:
    def test_round_trip(self):
        table, _ = _joined(6, 4, 2, 3)

        text = table.to_canonical()

        assert PartitionTable.from_canonical(text) == table
        assert text == PartitionTable.from_canonical(text).to_canonical()

    @pytest.mark.parametrize("text", ["not json", '{"K": 2}', '{"K": 2, "pi": 1, "rho": 1, "holders": {"1": [1]}}'])
    def test_malformed_tables_are_rejected(self, text):
        with pytest.raises(RegistryError):
            PartitionTable.from_canonical(text)
