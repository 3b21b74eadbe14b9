"""Render learned state machines as figures.

The CLI writes one PNG per learned/extracted model next to the model file
and the report, as a quick visual alternative to the DOT export.  States
sit on a circle; parallel transitions between the same pair of states are
merged into one multi-line edge label.
"""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrowPatch

from .automata import MealyMachine

MAX_LABEL_CHARS = 28


def _shorten(text: str) -> str:
    if len(text) <= MAX_LABEL_CHARS:
        return text
    keep = MAX_LABEL_CHARS // 2 - 1
    return text[:keep] + "…" + text[-keep:]


def _positions(n: int) -> list[tuple[float, float]]:
    if n == 1:
        return [(0.0, 0.0)]
    return [(math.cos(2 * math.pi * k / n - math.pi / 2),
             math.sin(2 * math.pi * k / n - math.pi / 2)) for k in range(n)]


def draw_machine(machine: MealyMachine, path, title: str | None = None) -> None:
    """Render the machine to an image file (format from the extension)."""
    pos = _positions(machine.n_states)
    labels: dict[tuple[int, int], list[str]] = defaultdict(list)
    for q in machine.states:
        for sym in machine.inputs:
            nxt, out = machine.step(q, sym)
            labels[(q, nxt)].append(_shorten(f"{sym} / {out}"))

    size = max(6.0, 2.2 + 0.9 * machine.n_states)
    fig, ax = plt.subplots(figsize=(size, size))
    ax.set_aspect("equal")
    ax.axis("off")
    node_r = 0.09

    for (src, dst), lines in sorted(labels.items()):
        text = "\n".join(lines)
        x0, y0 = pos[src]
        if src == dst:
            angle = math.atan2(y0, x0) if machine.n_states > 1 else math.pi / 2
            cx = x0 + 0.22 * math.cos(angle)
            cy = y0 + 0.22 * math.sin(angle)
            loop = plt.Circle((cx, cy), 0.13, fill=False, color="gray", lw=1.0)
            ax.add_patch(loop)
            ax.annotate(text, (cx + 0.16 * math.cos(angle),
                               cy + 0.16 * math.sin(angle)),
                        fontsize=7, ha="center", va="center", color="dimgray")
            continue
        x1, y1 = pos[dst]
        arrow = FancyArrowPatch((x0, y0), (x1, y1), arrowstyle="-|>",
                                connectionstyle="arc3,rad=0.15",
                                mutation_scale=12, color="gray",
                                shrinkA=18, shrinkB=18, lw=1.0)
        ax.add_patch(arrow)
        mx, my = (x0 + x1) / 2, (y0 + y1) / 2
        dx, dy = x1 - x0, y1 - y0
        norm = math.hypot(dx, dy) or 1.0
        off = 0.17
        ax.annotate(text, (mx - dy / norm * off, my + dx / norm * off),
                    fontsize=7, ha="center", va="center", color="dimgray")

    for q in machine.states:
        x, y = pos[q]
        face = "#cfe8ff" if q == machine.initial else "white"
        circle = plt.Circle((x, y), node_r, facecolor=face, edgecolor="black",
                            zorder=3)
        ax.add_patch(circle)
        ax.annotate(f"q{q}", (x, y), ha="center", va="center", zorder=4,
                    fontsize=9)

    margin = 0.55
    ax.set_xlim(-1 - margin, 1 + margin)
    ax.set_ylim(-1 - margin, 1 + margin)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
