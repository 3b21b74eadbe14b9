"""Brute-force ground-truth models of the simulated brokers.

Breadth-first exploration of the reachable broker states under a mapper's
alphabet yields the exact Mealy machine a correct learner must reproduce;
it is the independent oracle the learned models are checked against.
"""

from __future__ import annotations

from ..automata import MealyMachine
from ..sul import Mapper, abstract_output
from .broker import BrokerCore, MutantId, simulate_action

MAX_ABSTRACT_STATES = 10_000


class StateSpaceLimitError(RuntimeError):
    """The abstract state space exceeded the exploration guard."""


def extract_reference_model(mutant: MutantId, mapper: Mapper) -> MealyMachine:
    """Explore the simulated broker exhaustively and return the minimized
    machine over the mapper's abstract alphabet.

    Deterministic: exploration order is BFS with inputs in alphabet order,
    so repeated invocations produce identical machines.
    """
    initial = BrokerCore(mutant)
    initial_key = initial.freeze()
    cores = {initial_key: initial}
    order = [initial_key]
    transitions: dict = {}
    for state_key in order:  # grows while iterating
        core = cores[state_key]
        row = {}
        for symbol in mapper.inputs:
            successor = core.clone()
            messages = simulate_action(successor, mapper.actions[symbol],
                                       mapper.client_count)
            output = abstract_output(messages)
            successor_key = successor.freeze()
            if successor_key not in cores:
                if len(cores) >= MAX_ABSTRACT_STATES:
                    raise StateSpaceLimitError(
                        f"more than {MAX_ABSTRACT_STATES} abstract states; "
                        f"the mapper's concrete value set is not finite enough")
                cores[successor_key] = successor
                order.append(successor_key)
            row[symbol] = (successor_key, output)
        transitions[state_key] = row
    machine = MealyMachine.from_transitions(mapper.inputs, transitions,
                                            initial_key)
    return machine.minimize()
