"""Deterministic, input-enabled Mealy machines.

The machine representation is canonical: state ids are dense integers
assigned in breadth-first order from the initial state (inputs explored in
alphabet order), unreachable states are pruned at construction time, and
the transition table is total.  This makes structural equality meaningful
and keeps serialization, DOT export and state numbering reproducible.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass


class AlphabetError(ValueError):
    """A state or symbol is not part of the machine's alphabet."""


class ModelFormatError(ValueError):
    """A model file or transition table is malformed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Trace:
    """An input sequence paired with the outputs it produced."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise ValueError(
                f"trace length mismatch: {len(self.inputs)} inputs, "
                f"{len(self.outputs)} outputs"
            )

    def __len__(self) -> int:
        return len(self.inputs)

    def concat(self, other: "Trace") -> "Trace":
        return Trace(self.inputs + other.inputs, self.outputs + other.outputs)


def bfs_state_order(inputs: Sequence[str], transitions: Mapping, initial) -> list:
    """States reachable from `initial` in BFS order, inputs in alphabet order.

    `transitions` maps state -> {input -> (next_state, output)}.  The same
    ordering is used by `MealyMachine.from_transitions`, so callers can rely
    on list position k corresponding to canonical state id k.
    """
    order = [initial]
    seen = {initial}
    for state in order:  # grows while iterating
        row = transitions[state]
        for sym in inputs:
            nxt = row[sym][0]
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
    return order


class MealyMachine:
    """Immutable deterministic Mealy machine with a total transition map."""

    __slots__ = ("inputs", "outputs", "initial", "_rows", "_input_index")

    def __init__(self, inputs, outputs, rows, initial=0):
        self.inputs: tuple[str, ...] = tuple(inputs)
        self.outputs: tuple[str, ...] = tuple(outputs)
        self.initial: int = initial
        self._rows: tuple[tuple[tuple[int, str], ...], ...] = rows
        self._input_index = {sym: k for k, sym in enumerate(self.inputs)}

    @classmethod
    def from_transitions(cls, inputs: Sequence[str], transitions: Mapping,
                         initial, outputs: Sequence[str] | None = None) -> "MealyMachine":
        """Build a canonical machine from an arbitrary transition table.

        `transitions` maps state -> {input -> (next_state, output)} over
        arbitrary hashable state keys.  States are renumbered in BFS order
        from `initial`; unreachable states are dropped.  Raises
        ModelFormatError if the table is not total ("not input-enabled") or
        references unknown states.
        """
        inputs = tuple(inputs)
        if not inputs:
            raise AlphabetError("empty input alphabet")
        if len(set(inputs)) != len(inputs):
            raise AlphabetError("duplicate input symbol in alphabet")
        if initial not in transitions:
            raise ModelFormatError(f"initial state {initial!r} has no transitions")
        for state, row in transitions.items():
            for sym in inputs:
                if sym not in row:
                    raise ModelFormatError(
                        f"not input-enabled: state {state!r} is missing a "
                        f"transition for input {sym!r}"
                    )
                nxt = row[sym][0]
                if nxt not in transitions:
                    raise ModelFormatError(
                        f"transition {state!r} --{sym}--> references unknown "
                        f"state {nxt!r}"
                    )
        order = bfs_state_order(inputs, transitions, initial)
        index = {state: k for k, state in enumerate(order)}
        rows = tuple(
            tuple((index[transitions[state][sym][0]], str(transitions[state][sym][1]))
                  for sym in inputs)
            for state in order
        )
        used = sorted({out for row in rows for _, out in row})
        if outputs is None:
            outputs = used
        else:
            outputs = tuple(outputs)
            missing = [o for o in used if o not in outputs]
            if missing:
                raise ModelFormatError(
                    f"output {missing[0]!r} is used but not declared"
                )
        return cls(inputs, outputs, rows)

    @property
    def n_states(self) -> int:
        return len(self._rows)

    @property
    def states(self) -> range:
        return range(len(self._rows))

    def step(self, state: int, symbol: str) -> tuple[int, str]:
        """One transition: returns (next_state, output)."""
        if not 0 <= state < len(self._rows):
            raise AlphabetError(f"unknown state {state!r}")
        try:
            k = self._input_index[symbol]
        except KeyError:
            raise AlphabetError(f"unknown input symbol {symbol!r}") from None
        return self._rows[state][k]

    def run_from(self, state: int, seq: Iterable[str]) -> tuple[str, ...]:
        """Output sequence produced by executing `seq` starting in `state`."""
        outs = []
        for sym in seq:
            state, out = self.step(state, sym)
            outs.append(out)
        return tuple(outs)

    def run(self, seq: Iterable[str]) -> tuple[str, ...]:
        """Output sequence for `seq` from the initial state; run(()) == ()."""
        return self.run_from(self.initial, seq)

    def state_after(self, seq: Iterable[str], state: int | None = None) -> int:
        """State reached by executing `seq` (from the initial state by default)."""
        if state is None:
            state = self.initial
        for sym in seq:
            state, _ = self.step(state, sym)
        return state

    def access_strings(self) -> tuple[tuple[str, ...], ...]:
        """A shortest input sequence reaching each state, indexed by state id.

        BFS with inputs in alphabet order; because state ids are themselves
        BFS-assigned, access_strings()[q] is the lexicographically first
        shortest path to q.
        """
        access: list[tuple[str, ...] | None] = [None] * len(self._rows)
        access[self.initial] = ()
        queue = [self.initial]
        for state in queue:
            for sym in self.inputs:
                nxt, _ = self.step(state, sym)
                if access[nxt] is None:
                    access[nxt] = access[state] + (sym,)
                    queue.append(nxt)
        return tuple(access)  # total machine: every state reachable

    def minimize(self) -> "MealyMachine":
        """The unique minimal machine output-equivalent to this one.

        Partition refinement: states start grouped by their output row and
        are split until successor blocks stabilize.  The result is rebuilt
        in canonical BFS numbering, which makes minimize idempotent.
        """
        n = len(self._rows)
        n_inputs = len(self.inputs)
        # initial partition by output signature
        sig_ids: dict = {}
        block = []
        for q in range(n):
            sig = tuple(out for _, out in self._rows[q])
            block.append(sig_ids.setdefault(sig, len(sig_ids)))
        while True:
            sig_ids = {}
            new_block = []
            for q in range(n):
                sig = (block[q],
                       tuple(block[self._rows[q][k][0]] for k in range(n_inputs)))
                new_block.append(sig_ids.setdefault(sig, len(sig_ids)))
            if len(sig_ids) == len(set(block)):
                block = new_block
                break
            block = new_block
        transitions = {}
        for q in range(n):
            b = block[q]
            if b in transitions:
                continue
            transitions[b] = {
                sym: (block[self._rows[q][k][0]], self._rows[q][k][1])
                for k, sym in enumerate(self.inputs)
            }
        return MealyMachine.from_transitions(self.inputs, transitions,
                                             block[self.initial])

    def transitions_dict(self) -> dict:
        """Plain state -> {input -> (next, output)} view of the table."""
        return {
            q: {sym: self._rows[q][k] for k, sym in enumerate(self.inputs)}
            for q in range(len(self._rows))
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, MealyMachine):
            return NotImplemented
        return (self.inputs == other.inputs and self.outputs == other.outputs
                and self._rows == other._rows)

    def __hash__(self):
        return hash((self.inputs, self._rows))

    def __repr__(self) -> str:
        return (f"MealyMachine(states={self.n_states}, "
                f"inputs={len(self.inputs)}, outputs={len(self.outputs)})")


# ---------------------------------------------------------------------------
# Symbol quoting shared by the model-file format and the diff report format.

_RESERVED = {"--", "->", "/"}


def quote_symbol(sym: str) -> str:
    """Symbols with spaces, commas or quotes are double-quoted when written."""
    if sym == "" or sym in _RESERVED or any(c in sym for c in " \t,\""):
        return '"' + sym.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return sym


def _scan_quoted(text: str, pos: int) -> tuple[str, int]:
    # pos points at the opening quote
    out = []
    i = pos + 1
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            out.append(text[i + 1])
            i += 2
        elif c == '"':
            return "".join(out), i + 1
        else:
            out.append(c)
            i += 1
    raise ModelFormatError("unterminated quoted symbol")


def tokenize_symbols(line: str) -> list[str]:
    """Split a line into whitespace-separated tokens, honouring quotes."""
    tokens = []
    i = 0
    n = len(line)
    while i < n:
        if line[i].isspace():
            i += 1
        elif line[i] == '"':
            sym, i = _scan_quoted(line, i)
            tokens.append(sym)
        else:
            j = i
            while j < n and not line[j].isspace():
                j += 1
            tokens.append(line[i:j])
            i = j
    return tokens


def split_symbol_list(text: str) -> list[str]:
    """Parse a comma-separated symbol list, honouring quotes."""
    symbols = []
    i = 0
    n = len(text)
    while i < n:
        while i < n and text[i] in " \t":
            i += 1
        if i < n and text[i] == '"':
            sym, i = _scan_quoted(text, i)
        else:
            j = i
            while j < n and text[j] != ",":
                j += 1
            sym = text[i:j].strip()
            i = j
        symbols.append(sym)
        while i < n and text[i] in " \t":
            i += 1
        if i < n:
            if text[i] != ",":
                raise ModelFormatError(f"expected ',' at column {i + 1}")
            i += 1
    return symbols


# ---------------------------------------------------------------------------
# Model file format (line-based, UTF-8):
#
#   inputs: i1,i2,...
#   outputs: o1,o2,...
#   initial: q0
#   qFrom -- input / output -> qTo


def serialize(machine: MealyMachine) -> str:
    lines = [
        "inputs: " + ",".join(quote_symbol(s) for s in machine.inputs),
        "outputs: " + ",".join(quote_symbol(s) for s in machine.outputs),
        f"initial: q{machine.initial}",
    ]
    for q in machine.states:
        for sym in machine.inputs:
            nxt, out = machine.step(q, sym)
            lines.append(
                f"q{q} -- {quote_symbol(sym)} / {quote_symbol(out)} -> q{nxt}"
            )
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> MealyMachine:
    """Parse a model file; raises ModelFormatError with the offending line."""
    inputs: list[str] | None = None
    outputs: list[str] | None = None
    initial: str | None = None
    transitions: dict[str, dict[str, tuple[str, str]]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("inputs:"):
                inputs = split_symbol_list(line[len("inputs:"):])
            elif line.startswith("outputs:"):
                outputs = split_symbol_list(line[len("outputs:"):])
            elif line.startswith("initial:"):
                initial = line[len("initial:"):].strip()
            else:
                tokens = tokenize_symbols(line)
                if len(tokens) != 7 or tokens[1] != "--" or tokens[3] != "/" \
                        or tokens[5] != "->":
                    raise ModelFormatError(
                        "expected 'qFrom -- input / output -> qTo'")
                src, _, sym, _, out, _, dst = tokens
                row = transitions.setdefault(src, {})
                if sym in row:
                    raise ModelFormatError(
                        f"duplicate transition for ({src}, {sym})")
                row[sym] = (dst, out)
                transitions.setdefault(dst, {})
        except ModelFormatError as exc:
            if exc.line is None:
                raise ModelFormatError(str(exc), line=lineno) from None
            raise
    if inputs is None:
        raise ModelFormatError("missing 'inputs:' header")
    if outputs is None:
        raise ModelFormatError("missing 'outputs:' header")
    if initial is None:
        raise ModelFormatError("missing 'initial:' header")
    if initial not in transitions:
        raise ModelFormatError(f"initial state {initial!r} has no transitions")
    for state, row in transitions.items():
        for sym in row:
            if sym not in inputs:
                raise ModelFormatError(
                    f"transition from {state!r} uses undeclared input {sym!r}")
    return MealyMachine.from_transitions(inputs, transitions, initial,
                                         outputs=outputs)


def save_model(machine: MealyMachine, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(machine))


def load_model(path) -> MealyMachine:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(fh.read())


def to_dot(machine: MealyMachine, name: str = "mealy") -> str:
    """Graphviz export for human inspection (write-only)."""

    def esc(s: str) -> str:
        return s.replace("\\", "\\\\").replace('"', '\\"')

    lines = [f"digraph {name} {{", "  rankdir=LR;",
             '  __start [shape=point, label=""];',
             f"  __start -> q{machine.initial};"]
    for q in machine.states:
        lines.append(f"  q{q} [shape=circle];")
    for q in machine.states:
        for sym in machine.inputs:
            nxt, out = machine.step(q, sym)
            lines.append(f'  q{q} -> q{nxt} [label="{esc(sym)} / {esc(out)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
