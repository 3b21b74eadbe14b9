"""Equivalence-query approximation by conformance testing.

Two oracles are provided: a seeded random walk (cheap, incomplete) and the
W-method (complete up to an assumed bound on the number of extra states in
the SUL, expensive).  Both replay any counterexample before returning it,
so a returned sequence is guaranteed to distinguish SUL and hypothesis.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .automata import AlphabetError, MealyMachine
from .learner import SpuriousCounterexampleError
from .sul import SULEndpoint, run_query

RNG_ALGORITHM = "mersenne-twister"  # random.Random; the seed is always reported

Word = tuple[str, ...]


@dataclass(frozen=True)
class RandomWalkConfig:
    """Settings of the random-walk oracle.

    The step budget counts executed input symbols.  With reset_count_on_ce
    the budget restarts once a counterexample is found, i.e. it applies per
    learning round rather than to the whole experiment.  Inputs are drawn
    uniformly from the alphabet.
    """

    reset_probability: float = 0.05
    max_steps: int = 10000
    reset_count_on_ce: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.reset_probability <= 1.0:
            raise ValueError("reset_probability must be within [0, 1]")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


def _check_alphabets(sul: SULEndpoint, hyp: MealyMachine) -> None:
    if tuple(sul.alphabet) != tuple(hyp.inputs):
        raise AlphabetError(
            f"SUL alphabet {list(sul.alphabet)} does not match hypothesis "
            f"alphabet {list(hyp.inputs)}")


def _sul_outputs(sul: SULEndpoint, seq: Word) -> Word:
    query = getattr(sul, "query", None)
    if query is not None:
        return tuple(query(seq))
    return run_query(sul, seq)


def _verify_counterexample(sul: SULEndpoint, hyp: MealyMachine, ce: Word) -> Word:
    if _sul_outputs(sul, ce) == hyp.run(ce):
        raise SpuriousCounterexampleError(
            f"counterexample {list(ce)} vanished on replay")
    return ce


class RandomWalkOracle:
    """Stateful random-walk oracle; usable directly as a learn() oracle.

    The walk executes uniformly random inputs stepwise on the SUL and the
    hypothesis in lockstep, resetting both with the configured probability
    after each step.  The RNG is seeded once at construction, so a learning
    experiment is reproducible from (config, SUL).
    """

    def __init__(self, config: RandomWalkConfig):
        self.config = config
        self._rng = random.Random(config.seed)
        self._steps_used = 0

    def __call__(self, sul: SULEndpoint, hyp: MealyMachine) -> Word | None:
        _check_alphabets(sul, hyp)
        cfg = self.config
        alphabet = hyp.inputs
        while self._steps_used < cfg.max_steps:
            sul.reset()
            state = hyp.initial
            walk: list[str] = []
            while self._steps_used < cfg.max_steps:
                symbol = self._rng.choice(alphabet)
                walk.append(symbol)
                sul_out = sul.step(symbol)
                state, hyp_out = hyp.step(state, symbol)
                self._steps_used += 1
                if sul_out != hyp_out:
                    ce = _verify_counterexample(sul, hyp, tuple(walk))
                    if cfg.reset_count_on_ce:
                        self._steps_used = 0
                    return ce
                if self._rng.random() < cfg.reset_probability:
                    break  # start a new walk
        return None


def random_walk(sul: SULEndpoint, hyp: MealyMachine,
                config: RandomWalkConfig) -> Word | None:
    """One-shot random walk with a fresh budget; deterministic given the seed."""
    return RandomWalkOracle(config)(sul, hyp)


def characterizing_set(machine: MealyMachine) -> list[Word]:
    """A suffix-closed set of suffixes pairwise distinguishing all states.

    Iterative partition refinement collecting one distinguishing suffix per
    split: states in one block either differ directly on some input's
    output (suffix = that input) or have successors already distinguished
    by a collected suffix (prepend the input).  Requires a minimal machine.
    """
    suffixes: list[Word] = []

    def signature(state: int):
        return tuple(machine.run_from(state, w) for w in suffixes)

    def find_split(a: int, b: int) -> Word | None:
        for sym in machine.inputs:
            na, oa = machine.step(a, sym)
            nb, ob = machine.step(b, sym)
            if oa != ob:
                return (sym,)
            for w in suffixes:
                if machine.run_from(na, w) != machine.run_from(nb, w):
                    return (sym,) + w
        return None

    while True:
        groups: dict = {}
        for q in machine.states:
            groups.setdefault(signature(q), []).append(q)
        if all(len(members) == 1 for members in groups.values()):
            return suffixes
        split = None
        for members in groups.values():
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    split = find_split(members[i], members[j])
                    if split is not None:
                        break
                if split is not None:
                    break
            if split is not None:
                break
        if split is None:
            raise ValueError("machine is not minimal")
        suffixes.append(split)


def w_method_suite(hyp: MealyMachine, depth: int) -> list[Word]:
    """The W-method test suite P · I^{<=depth} · W for `hyp`.

    P is the transition cover (empty word plus every access string extended
    by one input), W the characterizing set of the minimized hypothesis
    (or the empty word for a single-state machine).  Tests appear in
    deterministic order; duplicates from overlapping decompositions are
    kept so the suite size matches |P|·|I^{<=depth}|·|W|.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    minimal = hyp.minimize()
    inputs = minimal.inputs
    access = minimal.access_strings()
    cover: list[Word] = [()]
    for prefix in access:
        for sym in inputs:
            cover.append(prefix + (sym,))
    middles: list[Word] = [()]
    layer: list[Word] = [()]
    for _ in range(depth):
        layer = [m + (sym,) for m in layer for sym in inputs]
        middles.extend(layer)
    suffixes = characterizing_set(minimal) or [()]
    return [p + m + w for p in cover for m in middles for w in suffixes]


def w_method(sul: SULEndpoint, hyp: MealyMachine, depth: int = 0) -> Word | None:
    """Run the W-method suite against the SUL; first failing test wins.

    Complete: if the SUL has at most |Q_hyp| + depth states and is not
    output-equivalent to the hypothesis, some test fails.
    """
    _check_alphabets(sul, hyp)
    for test in w_method_suite(hyp, depth):
        if not test:
            continue
        if _sul_outputs(sul, test) != hyp.run(test):
            return _verify_counterexample(sul, hyp, test)
    return None


class WMethodOracle:
    """W-method as a learn() oracle with a fixed extra-state depth."""

    def __init__(self, depth: int = 0):
        if depth < 0:
            raise ValueError("depth must be non-negative")
        self.depth = depth

    def __call__(self, sul: SULEndpoint, hyp: MealyMachine) -> Word | None:
        return w_method(sul, hyp, self.depth)
