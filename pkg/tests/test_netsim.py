import math

import pytest

from dfl.config.models import NetConfig
from dfl.netsim import LedgerError, Simulator, TrafficLedger, ms_to_us


def _sim(**net):
    return Simulator(NetConfig(**net))


def test_publish_reaches_every_subscriber_but_the_sender(make_node):
    sim = _sim()
    nodes = [make_node(i, sim) for i in range(1, 5)]
    for node in nodes:
        sim.subscribe(node.id, "partition-1")

    envs = sim.publish(1, "partition-1", b"hello", "sync")
    sim.run_until_idle()

    assert [e.dst for e in envs] == [2, 3, 4]
    assert [len(n.received) for n in nodes] == [0, 1, 1, 1]
    assert all(n.received[0].payload == b"hello" for n in nodes[1:])


def test_publish_to_empty_topic_sends_nothing(make_node):
    sim = _sim()
    make_node(1, sim)
    sim.ledger.open_round(1)

    assert sim.publish(1, "nobody-listens", b"x", "sync") == []

    sim.ledger.close_round(1)
    entry = sim.ledger_snapshot(1)[1]
    assert entry.bytes_sent == 0
    assert entry.messages_sent == 0


def test_drop_rate_matches_configuration(make_node):
    p = 0.3
    sim = _sim(drop_prob=p, seed=11)
    make_node(1, sim)
    dst = make_node(2, sim)
    n = 10000

    for _ in range(n):
        sim.send(1, 2, b"x", "update")
    sim.run_until_idle()

    delivered = len(dst.received) / n
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(delivered - (1 - p)) <= 4 * sigma


def test_latency_and_fifo_per_pair(make_node):
    sim = _sim(latency_mean=5.0)
    make_node(1, sim)
    dst = make_node(2, sim)

    first = sim.send(1, 2, b"a", "update")
    second = sim.send(1, 2, b"b", "update")
    sim.run_until_idle()

    assert first.deliver_time - first.send_time == ms_to_us(5.0)
    assert [e.payload for e in dst.received] == [b"a", b"b"]


def test_concurrent_requests_get_replies_in_order(make_node):
    sim = _sim(latency_mean=0.0)
    src = make_node(1, sim)
    make_node(2, sim, echo=True)

    sim.request(1, 2, b"first", "fetch", timeout_ms=10.0)
    sim.request(1, 2, b"second", "fetch", timeout_ms=10.0)
    sim.run_until_idle()

    assert [e.payload for e in src.received] == [b"first", b"second"]
    assert src.timeouts == []


def test_request_to_offline_agent_times_out(make_node):
    sim = _sim()
    src = make_node(1, sim)
    dst = make_node(2, sim)
    sim.set_offline(2, True)

    env = sim.request(1, 2, b"x", "update", timeout_ms=10.0)
    sim.run_until_idle()

    assert env.outcome == "unreachable"
    assert dst.received == []
    assert src.timeouts == [env]
    assert sim.now == ms_to_us(10.0)


def test_agent_going_offline_loses_in_flight_messages(make_node):
    sim = _sim(latency_mean=5.0)
    make_node(1, sim)
    dst = make_node(2, sim)

    env = sim.send(1, 2, b"x", "update")
    sim.set_offline(2, True)
    sim.run_until_idle()

    assert env.outcome == "lost"
    assert dst.received == []


def test_offline_agent_sends_nothing(make_node):
    sim = _sim()
    make_node(1, sim)
    make_node(2, sim)
    sim.set_offline(1, True)

    assert sim.send(1, 2, b"x", "update") is None
    assert sim.trace == []


def test_departed_agent_leaves_its_topics(make_node):
    sim = _sim()
    make_node(1, sim)
    make_node(2, sim)
    sim.subscribe(2, "membership")

    sim.remove(2)

    assert sim.subscribers("membership") == ()
    assert not sim.is_online(2)


def test_run_until_on_empty_queue_returns_immediately():
    sim = _sim()

    assert sim.run_until() == []
    assert sim.now == 0


def test_run_until_stops_at_the_given_time(make_node):
    sim = _sim(latency_mean=5.0)
    make_node(1, sim)
    dst = make_node(2, sim)
    sim.send(1, 2, b"x", "update")

    sim.run_until(ms_to_us(4.0))
    assert dst.received == []
    assert sim.now == ms_to_us(4.0)

    sim.run_until(ms_to_us(5.0))
    assert len(dst.received) == 1


def test_equal_time_callbacks_run_in_enqueue_order():
    sim = _sim()
    order = []
    for name in "abc":
        sim.call_at(100, lambda name=name: order.append(name))

    sim.run_until_idle()

    assert order == ["a", "b", "c"]


def test_callbacks_of_offline_owner_are_skipped(make_node):
    sim = _sim()
    make_node(1, sim)
    fired = []
    sim.call_later(1.0, lambda: fired.append(True), owner=1)
    sim.set_offline(1, True)

    sim.run_until_idle()

    assert fired == []


def test_same_seed_gives_identical_traces(make_node):
    def trace(seed):
        sim = _sim(latency_mean=2.0, latency_jitter=1.5, drop_prob=0.2, late_prob=0.1, late_extra=50.0, seed=seed)
        nodes = [make_node(i, sim) for i in range(1, 6)]
        for node in nodes:
            sim.subscribe(node.id, "t")
        for node in nodes:
            sim.publish(node.id, "t", bytes(node.id), "sync")
        sim.run_until_idle()
        return [record.line() for record in sim.trace]

    assert trace(3) == trace(3)
    assert trace(3) != trace(4)


def test_trace_lines_name_topic_copies_and_outcomes(make_node):
    sim = _sim(latency_mean=1.0)
    make_node(1, sim)
    make_node(2, sim)
    make_node(3, sim)
    sim.subscribe(2, "partition-4")
    sim.set_offline(3, True)

    sim.publish(1, "partition-4", b"abc", "sync")
    sim.send(1, 3, b"xy", "update")
    sim.run_until_idle()

    assert [r.line() for r in sim.trace] == [
        "0\t1\t3\tupdate\t2\tunreachable",
        "1000\t1\tpartition-4:2\tsync\t3\tdelivered",
    ]


class TestTrafficLedger:
    def test_dropped_messages_count_as_sent_but_not_received(self, make_node):
        sim = _sim(drop_prob=0.5, seed=2)
        make_node(1, sim)
        make_node(2, sim)
        sim.ledger.open_round(1)

        envs = [sim.send(1, 2, b"12345678", "update", category="update", vector_bytes=8) for _ in range(40)]
        sim.run_until_idle()
        sim.ledger.close_round(1)

        dropped = sum(e.dropped for e in envs)
        snap = sim.ledger_snapshot(1)
        assert 0 < dropped < 40
        assert snap[1].bytes_sent == 40 * 8
        assert snap[1].messages_sent == 40
        assert snap[1].messages_dropped == dropped
        assert snap[2].bytes_received == (40 - dropped) * 8
        assert snap[2].update_bytes_received == (40 - dropped) * 8
        assert snap[1].update_bytes_sent == 40 * 8

    def test_reply_payload_is_tracked_separately(self, make_node):
        sim = _sim()
        make_node(1, sim)
        make_node(2, sim)
        sim.ledger.open_round(3)

        request = sim.request(1, 2, b"req", "fetch", timeout_ms=50.0)
        sim.reply(request, 2, b"0123456789abcdef", "reply", category="reply", vector_bytes=16)
        sim.run_until_idle()
        sim.ledger.close_round(3)

        snap = sim.ledger_snapshot(3)
        assert snap[2].reply_bytes_sent == 16
        assert snap[1].reply_bytes_received == 16
        assert snap[1].update_bytes_received == 0
        assert snap[1].bytes_received == 16
        assert snap[2].bytes_received == 3

    def test_silent_agents_get_zero_entries(self):
        ledger = TrafficLedger()
        ledger.register(1)
        ledger.register(2)
        ledger.open_round(1)
        ledger.record_send(1, 10, None, 0)
        ledger.close_round(1)

        snap = ledger.snapshot(1)

        assert snap[1].bytes_sent == 10
        assert snap[2].bytes_sent == 0

    def test_open_and_unknown_rounds_cannot_be_read(self):
        ledger = TrafficLedger()
        ledger.open_round(1)

        with pytest.raises(LedgerError, match="round 1 is open"):
            ledger.snapshot(1)
        with pytest.raises(LedgerError, match="round 2 is unknown"):
            ledger.snapshot(2)

    def test_closed_round_cannot_be_reopened(self):
        ledger = TrafficLedger()
        ledger.open_round(1)
        ledger.close_round(1)

        with pytest.raises(LedgerError):
            ledger.open_round(1)

    def test_traffic_outside_a_round_is_not_counted(self):
        ledger = TrafficLedger()
        ledger.record_send(1, 10, None, 0)
        ledger.open_round(1)
        ledger.close_round(1)

        assert ledger.snapshot(1) == {}

    def test_snapshot_is_a_copy(self):
        ledger = TrafficLedger()
        ledger.open_round(1)
        ledger.record_send(1, 10, None, 0)
        ledger.close_round(1)

        ledger.snapshot(1)[1].bytes_sent = 99

        assert ledger.snapshot(1)[1].bytes_sent == 10


def test_blob_store_is_content_addressed():
    sim = _sim()

    digest = sim.blobs.put(b"weights")

    assert digest in sim.blobs
    assert sim.blobs.get(digest) == b"weights"
    assert sim.blobs.put(b"weights") == digest
    assert len(sim.blobs) == 1
    with pytest.raises(KeyError):
        sim.blobs.get("0" * 64)
