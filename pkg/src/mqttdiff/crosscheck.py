"""Pairwise equivalence checking of learned models.

The check searches the implicit product graph of two machines for
fail-states: state pairs where some input yields different outputs.  Every
trace reaching a fail-state is reported as a Diff.  Exploration can be
continued past a divergence up to a configurable number of differences per
trace, which exposes double faults the standard check would hide behind
its visited set; the visited set is therefore keyed by (state pair,
differences so far).

The product graph is traversed breadth-first with inputs in alphabet
order, so each fail-state is reported with the shortest (and among those
the alphabetically first) trace reaching it.  Reported traces replay
exactly on the two machines.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .automata import (AlphabetError, MealyMachine, quote_symbol,
                       tokenize_symbols)
from .sul import SULEndpoint, TransportError, run_query

Word = tuple[str, ...]

WILDCARD = "*"

CONFIRMED = "CONFIRMED"
SPURIOUS_A = "SPURIOUS_A"
SPURIOUS_B = "SPURIOUS_B"
VANISHED = "VANISHED"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Diff:
    """A counterexample to equivalence: one trace ending at a divergence."""

    inputs: Word
    outputs_a: Word
    outputs_b: Word
    divergences: tuple[int, ...]  # sorted indices where the outputs differ

    def __post_init__(self):
        if not len(self.inputs) == len(self.outputs_a) == len(self.outputs_b):
            raise ValueError("diff input/output lengths differ")
        expected = tuple(k for k in range(len(self.inputs))
                         if self.outputs_a[k] != self.outputs_b[k])
        if self.divergences != expected:
            raise ValueError(f"divergence indices {self.divergences} do not "
                             f"match outputs (expected {expected})")
        if not self.divergences:
            raise ValueError("diff without a divergence")
        if self.divergences[-1] != len(self.inputs) - 1:
            raise ValueError("diff trace must end at a divergence")

    @classmethod
    def from_outputs(cls, inputs: Iterable[str], outputs_a: Iterable[str],
                     outputs_b: Iterable[str]) -> "Diff":
        inputs = tuple(inputs)
        outputs_a = tuple(outputs_a)
        outputs_b = tuple(outputs_b)
        divergences = tuple(k for k in range(len(inputs))
                            if outputs_a[k] != outputs_b[k])
        return cls(inputs, outputs_a, outputs_b, divergences)


def cross_check(a: MealyMachine, b: MealyMachine,
                max_diffs: int = 1) -> list[Diff]:
    """All divergence traces between `a` and `b`, up to `max_diffs` output
    differences per trace.

    Empty result iff the machines are output-equivalent (max_diffs = 1 is
    the plain observation-equivalence check).  Results are deterministic:
    discovery order over the product graph with inputs in alphabet order.
    """
    if tuple(a.inputs) != tuple(b.inputs):
        raise AlphabetError(
            f"input alphabets differ: {list(a.inputs)} vs {list(b.inputs)}")
    if max_diffs < 1:
        raise ValueError("max_diffs must be at least 1")

    diffs: list[Diff] = []
    start = (a.initial, b.initial, 0)
    visited = {start}
    queue: deque = deque([(start, ())])  # (node, trace of (input, out_a, out_b))
    while queue:
        (qa, qb, count), trace = queue.popleft()
        for sym in a.inputs:
            na, oa = a.step(qa, sym)
            nb, ob = b.step(qb, sym)
            extended = trace + ((sym, oa, ob),)
            if oa != ob:
                diffs.append(Diff.from_outputs(
                    tuple(t[0] for t in extended),
                    tuple(t[1] for t in extended),
                    tuple(t[2] for t in extended)))
                nxt = (na, nb, count + 1)
                if count + 1 < max_diffs and nxt not in visited:
                    visited.add(nxt)
                    queue.append((nxt, extended))
            else:
                nxt = (na, nb, count)
                if nxt not in visited:
                    visited.add(nxt)
                    queue.append((nxt, extended))
    return diffs


@dataclass(frozen=True)
class FilterPattern:
    """Input-symbol matchers hiding already-diagnosed diffs.

    A pattern matches a diff when its matchers match a contiguous
    subsequence of the diff's inputs; "*" matches any single symbol.
    """

    matchers: Word

    def __post_init__(self):
        if not self.matchers:
            raise ValueError("empty filter pattern")

    def matches(self, inputs: Sequence[str]) -> bool:
        window = len(self.matchers)
        for start in range(len(inputs) - window + 1):
            if all(m == WILDCARD or m == inputs[start + k]
                   for k, m in enumerate(self.matchers)):
                return True
        return False


def parse_filter_file(text: str) -> list[FilterPattern]:
    """One pattern per line, symbols whitespace-separated, '*' wildcard."""
    patterns = []
    for line in text.splitlines():
        tokens = tokenize_symbols(line)
        if tokens:
            patterns.append(FilterPattern(tuple(tokens)))
    return patterns


def apply_filters(diffs: Iterable[Diff],
                  patterns: Sequence[FilterPattern]) -> list[Diff]:
    """Diffs whose input sequence matches no pattern, original order kept."""
    return [d for d in diffs
            if not any(p.matches(d.inputs) for p in patterns)]


# ---------------------------------------------------------------------------
# Replaying diffs against implementations


@dataclass(frozen=True)
class ConfirmationReport:
    """Outcome of replaying one diff on the two implementations."""

    diff: Diff
    verdict: str
    observed_a: Word = ()
    observed_b: Word = ()
    error: str | None = None


def confirm(diff: Diff, sul_a: SULEndpoint, sul_b: SULEndpoint) -> ConfirmationReport:
    """Replay the diff's inputs on both SULs and classify the outcome.

    CONFIRMED: both implementations reproduce their model's outputs (the
    divergence is real).  SPURIOUS_A / SPURIOUS_B: an implementation
    disagrees with its own model, i.e. that model was mislearned.
    VANISHED: the implementations agree with each other on this trace.
    Transport failures yield INCONCLUSIVE with the error attached.
    """
    try:
        observed_a = run_query(sul_a, diff.inputs)
        observed_b = run_query(sul_b, diff.inputs)
    except TransportError as exc:
        return ConfirmationReport(diff, INCONCLUSIVE, error=str(exc))
    if observed_a == observed_b:
        verdict = VANISHED
    elif observed_a != diff.outputs_a:
        verdict = SPURIOUS_A
    elif observed_b != diff.outputs_b:
        verdict = SPURIOUS_B
    else:
        verdict = CONFIRMED
    return ConfirmationReport(diff, verdict, observed_a, observed_b)


# ---------------------------------------------------------------------------
# Diff report: one block per diff with aligned columns; the marker line
# points at every divergent position.  The format round-trips through
# parse_diff_report so reports double as replay input.


def format_diff(diff: Diff, number: int) -> str:
    cols_in = [quote_symbol(s) for s in diff.inputs]
    cols_a = [quote_symbol(s) for s in diff.outputs_a]
    cols_b = [quote_symbol(s) for s in diff.outputs_b]
    widths = [max(len(cols_in[k]), len(cols_a[k]), len(cols_b[k]))
              for k in range(len(cols_in))]

    def pad(cells):
        return "  ".join(cell.ljust(widths[k]) for k, cell in enumerate(cells)).rstrip()

    marker_cells = [("^" if k in diff.divergences else "").ljust(widths[k])
                    for k in range(len(cols_in))]
    marker = "      " + "  ".join(marker_cells).rstrip()
    return "\n".join([
        f"#{number}",
        "  in: " + pad(cols_in),
        "  A:  " + pad(cols_a),
        "  B:  " + pad(cols_b),
        marker,
    ])


def format_diff_report(diffs: Sequence[Diff]) -> str:
    if not diffs:
        return "no differences\n"
    blocks = [format_diff(d, k + 1) for k, d in enumerate(diffs)]
    return "\n\n".join(blocks) + "\n"


def parse_diff_report(text: str) -> list[Diff]:
    """Parse a diff report back into Diff values (marker lines are ignored;
    divergences are recomputed from the output rows)."""
    diffs: list[Diff] = []
    inputs: Word | None = None
    outputs_a: Word | None = None
    outputs_b: Word | None = None

    def flush(lineno: int):
        nonlocal inputs, outputs_a, outputs_b
        if inputs is None and outputs_a is None and outputs_b is None:
            return
        if inputs is None or outputs_a is None or outputs_b is None:
            raise ValueError(f"line {lineno}: incomplete diff block")
        diffs.append(Diff.from_outputs(inputs, outputs_a, outputs_b))
        inputs = outputs_a = outputs_b = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            flush(lineno)
        elif line.startswith("in:"):
            inputs = tuple(tokenize_symbols(line[3:]))
        elif line.startswith("A:"):
            outputs_a = tuple(tokenize_symbols(line[2:]))
        elif line.startswith("B:"):
            outputs_b = tuple(tokenize_symbols(line[2:]))
        # anything else: marker lines, blanks, prose
    flush(len(text.splitlines()))
    return diffs
