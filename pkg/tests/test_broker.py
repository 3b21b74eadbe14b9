"""Simulated broker semantics: reference conformance and seeded mutants."""

import random

import pytest

from mqttdiff.sul import Will, connect, disconnect, publish, subscribe, tcp_close
from mqttdiff.mqtt import (BrokerState, MutantId, extract_reference_model,
                           mapper_simple, mapper_two_clients_retained_will,
                           sim_step)
from mqttdiff.mqtt.broker import simulate_action, BrokerCore
from mqttdiff.crosscheck import cross_check

WILL = Will("c2_will", "bye", retain=True)


def run_actions(mutant, client_count, actions):
    state = BrokerState.initial(mutant, client_count)
    outputs = []
    for action in actions:
        state, messages = sim_step(state, action)
        outputs.append(messages)
    return state, outputs


def test_second_connect_always_closes_the_connection():
    _, out = run_actions(MutantId.NONE, 1, [connect(0), connect(0)])
    assert out == [[["C_Ack"]], [["ConnectionClosed"]]]


def test_ignoring_mutant_keeps_state_on_second_connect():
    state, out = run_actions(MutantId.IGNORE_SECOND_CONNECT, 1,
                             [connect(0), connect(0)])
    assert out == [[["C_Ack"]], [[]]]
    # still connected: a subscribe is acknowledged
    _, messages = sim_step(state, subscribe(0, "t"))
    assert messages == [["S_Ack"]]


def test_repeated_subscribe_redelivers_retained_message():
    actions = [connect(0), publish(0, "t", "m", retain=True),
               subscribe(0, "t"), subscribe(0, "t")]
    _, out = run_actions(MutantId.NONE, 1, actions)
    assert sorted(out[2][0]) == ["Pub(t,m)", "S_Ack"]
    assert sorted(out[3][0]) == ["Pub(t,m)", "S_Ack"]


def test_retained_resend_mutant_suppresses_redelivery_only():
    actions = [connect(0), publish(0, "t", "m", retain=True),
               subscribe(0, "t"), subscribe(0, "t")]
    _, out = run_actions(MutantId.NO_RETAINED_RESEND_ON_RESUBSCRIBE, 1, actions)
    assert sorted(out[2][0]) == ["Pub(t,m)", "S_Ack"]  # first subscribe intact
    assert out[3][0] == ["S_Ack"]


def test_graceful_disconnect_never_publishes_the_will():
    actions = [connect(0), subscribe(0, "c2_will"),
               connect(1, will=WILL), disconnect(1), subscribe(0, "c2_will")]
    _, out = run_actions(MutantId.NONE, 2, actions)
    assert out[3] == [[], []]
    assert out[4][0] == ["S_Ack"]  # nothing retained either


def test_abrupt_close_with_stored_will_publishes_it():
    # live delivery to the existing subscriber and retained storage
    actions = [connect(0), subscribe(0, "c2_will"),
               connect(1, will=WILL), tcp_close(1)]
    state, out = run_actions(MutantId.NONE, 2, actions)
    assert out[3] == [["Pub(c2_will,bye)"], []]
    assert state.core.retained == {"c2_will": "bye"}


def test_violation_close_counts_as_abrupt_and_fires_the_will():
    actions = [connect(0), subscribe(0, "c2_will"),
               connect(1, will=WILL), connect(1, will=WILL)]
    _, out = run_actions(MutantId.NONE, 2, actions)
    assert out[3] == [["Pub(c2_will,bye)"], ["ConnectionClosed"]]


def test_retained_will_five_step_sequence():
    mapper = mapper_two_clients_retained_will()
    sequence = ["Connect1", "ConnectWill2", "TcpClose2",
                "Subscribe1", "Subscribe1"]
    actions = [mapper.concretize(symbol) for symbol in sequence]
    _, reference = run_actions(MutantId.NONE, 2, actions)
    assert sorted(reference[3][0]) == ["Pub(c2_will,bye)", "S_Ack"]
    assert sorted(reference[4][0]) == ["Pub(c2_will,bye)", "S_Ack"]
    _, mutant = run_actions(MutantId.NO_RETAINED_RESEND_ON_RESUBSCRIBE, 2,
                            actions)
    assert sorted(mutant[3][0]) == ["Pub(c2_will,bye)", "S_Ack"]
    assert mutant[4][0] == ["S_Ack"]


def test_empty_retained_publish_deletes_entry_and_forwards_nothing():
    actions = [connect(1), publish(1, "c2_will", "bye", retain=True),
               publish(1, "c2_will", "", retain=True)]
    state, out = run_actions(MutantId.NONE, 2, actions)
    assert out[2] == [[], []]
    assert state.core.retained == {}
    state, _ = sim_step(state, connect(0))
    _, messages = sim_step(state, subscribe(0, "c2_will"))
    assert messages[0] == ["S_Ack"]


def test_drop_empty_retained_mutant_keeps_the_entry():
    actions = [connect(1), publish(1, "c2_will", "bye", retain=True),
               publish(1, "c2_will", "", retain=True), connect(0)]
    state, _ = run_actions(MutantId.DROP_EMPTY_RETAINED, 2, actions)
    assert state.core.retained == {"c2_will": "bye"}
    _, messages = sim_step(state, subscribe(0, "c2_will"))
    assert sorted(messages[0]) == ["Pub(c2_will,bye)", "S_Ack"]


def test_publish_forwards_to_matching_subscribers_including_self():
    actions = [connect(0), subscribe(0, "t"), publish(0, "t", "m")]
    _, out = run_actions(MutantId.NONE, 1, actions)
    assert out[2] == [["Pub(t,m)"]]


def test_topic_matching_is_exact_string():
    actions = [connect(0), subscribe(0, "t"), publish(0, "other", "m")]
    _, out = run_actions(MutantId.NONE, 1, actions)
    assert out[2] == [[]]


def test_sim_step_is_pure():
    state = BrokerState.initial(MutantId.NONE, 1)
    frozen = state.freeze()
    sim_step(state, connect(0))
    assert state.freeze() == frozen


def test_all_actions_are_total_in_every_state():
    rng = random.Random(8)
    mapper = mapper_two_clients_retained_will()
    state = BrokerState.initial(MutantId.NONE, 2)
    for _ in range(300):
        action = mapper.concretize(rng.choice(mapper.inputs))
        state, messages = sim_step(state, action)
        assert len(messages) == 2


def test_unknown_action_kind_is_rejected():
    from dataclasses import replace

    core = BrokerCore(MutantId.NONE)
    with pytest.raises(ValueError):
        simulate_action(core, replace(connect(0), kind="bogus"), 1)


# -- extraction ---------------------------------------------------------------


def test_extraction_guard_aborts_on_state_explosion(monkeypatch):
    from mqttdiff.mqtt import extract
    monkeypatch.setattr(extract, "MAX_ABSTRACT_STATES", 3)
    with pytest.raises(extract.StateSpaceLimitError):
        extract.extract_reference_model(MutantId.NONE,
                                        mapper_two_clients_retained_will())


def test_extraction_is_deterministic():
    mapper = mapper_two_clients_retained_will()
    first = extract_reference_model(MutantId.NONE, mapper)
    second = extract_reference_model(MutantId.NONE, mapper)
    assert first == second


def test_each_mutant_differs_from_the_reference():
    for mapper in (mapper_simple(), mapper_two_clients_retained_will()):
        reference = extract_reference_model(MutantId.NONE, mapper)
        for mutant in (MutantId.IGNORE_SECOND_CONNECT,
                       MutantId.NO_RETAINED_RESEND_ON_RESUBSCRIBE,
                       MutantId.DROP_EMPTY_RETAINED):
            model = extract_reference_model(mutant, mapper)
            diffs = cross_check(reference, model, 1)
            if mapper.client_count == 2:
                assert diffs
            # the simple mapper cannot distinguish every mutant: it has no
            # will and no empty retained publish
            if mutant is MutantId.IGNORE_SECOND_CONNECT:
                assert diffs


def test_extracted_reference_and_double_connect_mutant_differ_as_reported():
    mapper = mapper_simple()
    reference = extract_reference_model(MutantId.NONE, mapper)
    mutant = extract_reference_model(MutantId.IGNORE_SECOND_CONNECT, mapper)
    assert reference.run(("Connect", "Connect")) == ("C_Ack", "ConnectionClosed")
    assert mutant.run(("Connect", "Connect")) == ("C_Ack", "Empty")
