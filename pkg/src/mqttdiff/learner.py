"""Active Mealy-machine learning in the MAT framework.

Observation-table learning with output queries: the table is repaired to
be closed and consistent, a hypothesis is built from its distinct rows,
and counterexamples returned by the equivalence oracle are analysed with a
binary search for the distinguishing suffix, which is added to the suffix
set.  Every round strictly increases the hypothesis state count.

All SUL traffic flows through a write-through output cache (a trie over
input symbols).  The cache guarantees that no input sequence is executed
twice within an experiment and doubles as the nondeterminism detector:
two executions disagreeing on the output of a shared prefix abort learning
with both witness traces.
"""

from __future__ import annotations

import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

from .automata import MealyMachine, Trace, bfs_state_order
from .sul import SULEndpoint

Word = tuple[str, ...]


class NondeterminismError(RuntimeError):
    """The SUL produced different outputs for the same input sequence."""

    def __init__(self, inputs: Word, outputs_a: Word, outputs_b: Word):
        self.witness_a = Trace(inputs, outputs_a)
        self.witness_b = Trace(inputs, outputs_b)
        super().__init__(
            "nondeterministic SUL: inputs %s produced both %s and %s"
            % (list(inputs), list(outputs_a), list(outputs_b))
        )


class SpuriousCounterexampleError(RuntimeError):
    """The oracle returned a sequence on which SUL and hypothesis agree."""


class CachedSUL(SULEndpoint):
    """Write-through output cache wrapping a SUL endpoint.

    Outputs are stored in a trie keyed by input symbols.  query() answers
    from the trie when the whole sequence is already covered; otherwise it
    resets the wrapped endpoint and executes the sequence, validating every
    step against previously recorded outputs.  Stepwise use (reset/step)
    goes through the same recording path, so equivalence-oracle traffic is
    cached and checked as well.

    `queries` counts executed reset+step episodes on the wrapped endpoint
    (cache hits execute nothing); `symbols` counts executed input symbols.
    """

    def __init__(self, endpoint: SULEndpoint):
        self._sul = endpoint
        self._root: dict = {}
        self._node: dict | None = None
        self._trace_in: list[str] = []
        self._trace_out: list[str] = []
        self._in_episode = False
        self.queries = 0
        self.symbols = 0
        self.name = getattr(endpoint, "name", "sul")

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self._sul.alphabet

    def reset(self) -> None:
        self._sul.reset()
        self._node = self._root
        self._trace_in = []
        self._trace_out = []
        self._in_episode = False

    def step(self, symbol: str) -> str:
        if self._node is None:
            raise RuntimeError("step() before reset()")
        if not self._in_episode:
            self._in_episode = True
            self.queries += 1
        out = self._sul.step(symbol)
        self.symbols += 1
        entry = self._node.get(symbol)
        if entry is None:
            child: dict = {}
            self._node[symbol] = (out, child)
        else:
            cached_out, child = entry
            if cached_out != out:
                inputs = tuple(self._trace_in) + (symbol,)
                seen = tuple(self._trace_out)
                raise NondeterminismError(inputs, seen + (cached_out,),
                                          seen + (out,))
        self._trace_in.append(symbol)
        self._trace_out.append(out)
        self._node = child
        return out

    def lookup(self, seq: Iterable[str]) -> Word | None:
        """Cached output sequence for `seq`, or None if not fully covered."""
        node = self._root
        outs = []
        for symbol in seq:
            entry = node.get(symbol)
            if entry is None:
                return None
            out, node = entry
            outs.append(out)
        return tuple(outs)

    def query(self, seq: Iterable[str]) -> Word:
        """Output query: cached if covered, else one reset+execution."""
        seq = tuple(seq)
        cached = self.lookup(seq)
        if cached is not None:
            return cached
        self.reset()
        return tuple(self.step(symbol) for symbol in seq)

    def close(self) -> None:
        self._sul.close()


@dataclass
class LearnStatistics:
    """Per-experiment counters mirroring the usual learning-report rows."""

    mq_queries: int = 0
    mq_symbols: int = 0
    ct_queries: int = 0
    eq_queries: int = 0
    mq_time_s: float = 0.0
    ct_time_s: float = 0.0

    def report_items(self, n_states: int) -> list[tuple[str, str]]:
        """Flat key-value report rows (fixed key names and order)."""
        return [
            ("states", str(n_states)),
            ("mq_time_s", f"{self.mq_time_s:.3f}"),
            ("mq_queries", str(self.mq_queries)),
            ("ct_time_s", f"{self.ct_time_s:.3f}"),
            ("ct_queries", str(self.ct_queries)),
            ("eq_queries", str(self.eq_queries)),
        ]


@dataclass
class LearnLimits:
    """Optional budget; exhausting it returns the last hypothesis unverified."""

    max_rounds: int | None = None
    max_queries: int | None = None


@dataclass
class Hypothesis:
    """A candidate machine plus one table prefix reaching each state."""

    machine: MealyMachine
    access: tuple[Word, ...]  # indexed by machine state id


@dataclass
class LearnResult:
    machine: MealyMachine
    stats: LearnStatistics
    converged: bool


class ObservationTable:
    """Prefix/suffix-indexed map of observed output suffixes.

    S is a prefix-closed list of access prefixes (starting with the empty
    word); E is a suffix-closed list of distinguishing suffixes containing
    every single input from the start.  entries[(p, e)] holds the last
    len(e) outputs of the SUL's response to p+e.
    """

    def __init__(self, inputs: Sequence[str], sul: CachedSUL):
        self.inputs: tuple[str, ...] = tuple(inputs)
        self.sul = sul
        self.S: list[Word] = [()]
        self.E: list[Word] = [(sym,) for sym in self.inputs]
        self.entries: dict[tuple[Word, Word], Word] = {}

    def _all_prefixes(self) -> list[Word]:
        rows = list(self.S)
        in_s = set(self.S)
        for p in self.S:
            for sym in self.inputs:
                ext = p + (sym,)
                if ext not in in_s:
                    rows.append(ext)
        return rows

    def fill(self) -> None:
        """Complete all missing (prefix, suffix) entries via output queries."""
        for p in self._all_prefixes():
            for e in self.E:
                if (p, e) not in self.entries:
                    out = self.sul.query(p + e)
                    self.entries[(p, e)] = out[len(p):]

    def row(self, prefix: Word) -> tuple[Word, ...]:
        return tuple(self.entries[(prefix, e)] for e in self.E)

    def find_unclosed(self) -> Word | None:
        """An S·I prefix whose row matches no S row, if any."""
        s_rows = {self.row(p) for p in self.S}
        in_s = set(self.S)
        for p in self.S:
            for sym in self.inputs:
                ext = p + (sym,)
                if ext not in in_s and self.row(ext) not in s_rows:
                    return ext
        return None

    def find_inconsistent(self) -> Word | None:
        """A new suffix separating two equal S rows that disagree on an
        extension, if any."""
        by_row: dict[tuple[Word, ...], Word] = {}
        for p in self.S:
            r = self.row(p)
            if r not in by_row:
                by_row[r] = p
                continue
            q = by_row[r]
            for sym in self.inputs:
                row_p = self.row(p + (sym,))
                row_q = self.row(q + (sym,))
                if row_p != row_q:
                    for k, e in enumerate(self.E):
                        if row_p[k] != row_q[k]:
                            return (sym,) + e
        return None

    def close_and_make_consistent(self) -> None:
        """Repair loop: rows/columns are only added, never removed."""
        while True:
            self.fill()
            unclosed = self.find_unclosed()
            if unclosed is not None:
                self.S.append(unclosed)
                continue
            suffix = self.find_inconsistent()
            if suffix is not None:
                self.add_suffix(suffix)
                continue
            return

    def add_suffix(self, suffix: Word) -> bool:
        """Add `suffix` and any missing sub-suffixes (keeps E suffix-closed)."""
        added = False
        for k in range(len(suffix)):
            sub = suffix[k:]
            if sub not in self.E:
                self.E.append(sub)
                added = True
        return added

    def build_hypothesis(self) -> Hypothesis:
        """Machine whose states are the distinct rows of S.

        The representative of a row is the first S prefix carrying it; the
        transition target of (row, i) is the row of representative+i.
        Requires the table to be closed and consistent.
        """
        reps: dict[tuple[Word, ...], Word] = {}
        for p in self.S:
            reps.setdefault(self.row(p), p)
        transitions: dict = {}
        for r, p in reps.items():
            row_trans = {}
            for sym in self.inputs:
                target = self.row(p + (sym,))
                if target not in reps:
                    raise RuntimeError("internal error: table is not closed")
                out = self.entries[(p, (sym,))][-1]
                row_trans[sym] = (target, out)
            transitions[r] = row_trans
        initial_row = self.row(())
        machine = MealyMachine.from_transitions(self.inputs, transitions,
                                                initial_row)
        order = bfs_state_order(self.inputs, transitions, initial_row)
        access = tuple(reps[r] for r in order)
        return Hypothesis(machine, access)

    def process_counterexample(self, ce: Iterable[str], hyp: Hypothesis) -> None:
        """Fold a counterexample into the table.

        Binary search locates the position where replacing the executed
        prefix by the hypothesis' access prefix stops reproducing the
        divergence; the remaining suffix distinguishes two rows the current
        hypothesis merges and is added to E.  After the next repair the
        hypothesis has strictly more states.
        """
        ce = tuple(ce)
        machine = hyp.machine

        def differs(i: int) -> bool:
            state = machine.state_after(ce[:i])
            prefix = hyp.access[state]
            out = self.sul.query(prefix + ce[i:])
            return out[len(prefix):] != machine.run_from(state, ce[i:])

        if not differs(0):
            raise SpuriousCounterexampleError(
                f"inputs {list(ce)} do not distinguish SUL and hypothesis")
        lo, hi = 0, len(ce)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if differs(mid):
                lo = mid
            else:
                hi = mid
        suffix = ce[lo + 1:]
        if not suffix or not self.add_suffix(suffix):
            # unreachable for a genuine counterexample: the query cache keeps
            # every table entry consistent with executed traces
            raise SpuriousCounterexampleError(
                f"counterexample {list(ce)} yields no new suffix")


EquivalenceOracle = Callable[[SULEndpoint, MealyMachine], Word | None]


def learn(endpoint: SULEndpoint, oracle: EquivalenceOracle,
          inputs: Sequence[str] | None = None,
          limits: LearnLimits | None = None) -> LearnResult:
    """Learn a Mealy machine of `endpoint` using `oracle` for equivalence.

    Returns the final hypothesis together with statistics.  converged is
    True when the last equivalence query found no counterexample; if
    `limits` runs out first, the last hypothesis is returned unverified.
    """
    alphabet = tuple(inputs) if inputs is not None else tuple(endpoint.alphabet)
    if not alphabet:
        raise ValueError("empty input alphabet")
    limits = limits or LearnLimits()
    cache = CachedSUL(endpoint)
    table = ObservationTable(alphabet, cache)
    stats = LearnStatistics()
    hyp: Hypothesis | None = None

    while True:
        t0 = time.perf_counter()
        q0, s0 = cache.queries, cache.symbols
        table.close_and_make_consistent()
        new_hyp = table.build_hypothesis()
        stats.mq_time_s += time.perf_counter() - t0
        stats.mq_queries += cache.queries - q0
        stats.mq_symbols += cache.symbols - s0
        if hyp is not None and new_hyp.machine.n_states <= hyp.machine.n_states:
            raise RuntimeError("internal error: hypothesis did not grow")
        hyp = new_hyp

        t1 = time.perf_counter()
        q1 = cache.queries
        ce = oracle(cache, hyp.machine)
        stats.ct_time_s += time.perf_counter() - t1
        stats.ct_queries += cache.queries - q1
        stats.eq_queries += 1
        if ce is None:
            return LearnResult(hyp.machine, stats, converged=True)

        t2 = time.perf_counter()
        q2, s2 = cache.queries, cache.symbols
        table.process_counterexample(ce, hyp)
        stats.mq_time_s += time.perf_counter() - t2
        stats.mq_queries += cache.queries - q2
        stats.mq_symbols += cache.symbols - s2

        if limits.max_rounds is not None and stats.eq_queries >= limits.max_rounds:
            return LearnResult(hyp.machine, stats, converged=False)
        if limits.max_queries is not None and cache.queries >= limits.max_queries:
            return LearnResult(hyp.machine, stats, converged=False)
