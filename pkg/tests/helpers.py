"""Shared test utilities: random machines and independent comparison oracles."""

from __future__ import annotations

import random
from collections import deque

from mqttdiff.automata import MealyMachine
from mqttdiff.crosscheck import cross_check


def random_machine(rng: random.Random, n_states: int, n_inputs: int = 2,
                   n_outputs: int = 2) -> MealyMachine:
    """A random total machine in which every state is reachable.

    Reachability is forced by a spanning construction: each state above 0
    gets a dedicated incoming transition from a lower-numbered state; the
    remaining transition slots are filled randomly.  The result is not
    necessarily minimal.
    """
    inputs = tuple(f"i{k}" for k in range(n_inputs))
    outputs = [f"o{k}" for k in range(n_outputs)]
    slots: dict[int, dict[str, tuple[int, str]]] = {
        q: {} for q in range(n_states)
    }
    for q in range(1, n_states):
        while True:
            src = rng.randrange(q)
            free = [sym for sym in inputs if sym not in slots[src]]
            if free:
                slots[src][rng.choice(free)] = (q, rng.choice(outputs))
                break
    for q in range(n_states):
        for sym in inputs:
            if sym not in slots[q]:
                slots[q][sym] = (rng.randrange(n_states), rng.choice(outputs))
    return MealyMachine.from_transitions(inputs, slots, 0)


def duplicate_state(machine: MealyMachine, rng: random.Random) -> MealyMachine:
    """An equivalent machine with one state split into two copies."""
    trans = machine.transitions_dict()
    candidates = [t for t in machine.states
                  if any(trans[q][sym][0] == t for q in machine.states
                         for sym in machine.inputs)]
    target = rng.choice(candidates)
    copy_id = machine.n_states
    trans[copy_id] = dict(trans[target])
    incoming = [(q, sym) for q in machine.states for sym in machine.inputs
                if trans[q][sym][0] == target]
    q, sym = rng.choice(incoming)
    trans[q][sym] = (copy_id, trans[q][sym][1])
    return MealyMachine.from_transitions(machine.inputs, trans, machine.initial)


def exhaustive_divergence(a: MealyMachine, b: MealyMachine,
                          depth: int) -> tuple[str, ...] | None:
    """Shortest input sequence up to `depth` on which the outputs differ.

    Plain tree enumeration of all input sequences (no visited set), so it
    is independent of the product-graph search it serves as an oracle for.
    """
    queue = deque([(a.initial, b.initial, ())])
    while queue:
        qa, qb, seq = queue.popleft()
        for sym in a.inputs:
            na, oa = a.step(qa, sym)
            nb, ob = b.step(qb, sym)
            if oa != ob:
                return seq + (sym,)
            if len(seq) + 1 < depth:
                queue.append((na, nb, seq + (sym,)))
    return None


def equivalent(a: MealyMachine, b: MealyMachine) -> bool:
    """Output equivalence via exhaustive comparison to the sound bound.

    Tree enumeration is exponential in the alphabet; keep this for small
    machines over few inputs and use bisim_equivalent otherwise.
    """
    return exhaustive_divergence(a, b, a.n_states + b.n_states) is None


def bisim_equivalent(a: MealyMachine, b: MealyMachine) -> bool:
    """Output equivalence via the product-graph check (any machine size)."""
    return cross_check(a, b, 1) == []


def perfect_oracle(target: MealyMachine):
    """Equivalence oracle that compares hypotheses against a known machine."""

    def oracle(sul, hyp):
        diffs = cross_check(hyp, target, 1)
        return diffs[0].inputs if diffs else None

    return oracle
