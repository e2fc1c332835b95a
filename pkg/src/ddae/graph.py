"""Block-diagram form of a system and causality-loop analysis.

A diagram is a directed labeled graph: vertex j feeds vertex i through the
scalar kernel stored at labels[i][j].  The canonical form introduces one
integrator vertex per differential state, so every system unfolds into
elementary scalar subsystems.  A causality loop is a cycle whose edges all
carry mass at t = 0; its absence makes the instantaneous algebraic coupling
nilpotent and hence the system well-posed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import DelayKernel, atom_at_zero, entry_kernel

__all__ = [
    "INTEGRATOR",
    "BlockDiagram",
    "CausalityReport",
    "canonical_diagram",
    "adjacency",
    "causality_check",
    "to_dot",
]


class _Integrator:
    """Label of an integrator edge: strictly causal, never in the adjacency."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INTEGRATOR"


INTEGRATOR = _Integrator()


@dataclass(frozen=True, eq=False)
class BlockDiagram:
    """Square array of edge labels plus one variable tag per vertex.

    labels[i][j] is the kernel of the edge j -> i: None (no edge), the
    INTEGRATOR marker, or a 1x1 kernel.
    """

    labels: tuple
    tags: tuple

    def __post_init__(self):
        labels = tuple(tuple(row) for row in self.labels)
        size = len(labels)
        if any(len(row) != size for row in labels):
            raise ValueError("label array must be square")
        if len(self.tags) != size:
            raise ValueError("need exactly one tag per vertex")
        for row in labels:
            for lab in row:
                if lab is None or lab is INTEGRATOR:
                    continue
                if not isinstance(lab, DelayKernel) or lab.shape != (1, 1):
                    raise ValueError("edge labels must be scalar kernels")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "tags", tuple(self.tags))

    @property
    def size(self):
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class CausalityReport:
    """Either a witness cycle or the nilpotency index of the adjacency."""

    acyclic: bool
    loop: tuple | None
    nilpotency_index: int | None


def canonical_diagram(system):
    """Diagram with vertices (x_1..x_n, w_1..w_n, y_1..y_m).

    Each x_i integrates its w_i; the w row carries the differential kernels
    and the y row the algebraic ones.  Requires positive memory.
    """
    if system.r <= 0:
        raise ValueError("block diagrams need positive memory")
    n, m = system.n, system.m
    size = 2 * n + m
    labels = [[None] * size for _ in range(size)]
    for i in range(n):
        labels[i][n + i] = INTEGRATOR
    blocks = [(system.A, n, 0), (system.B, n, 2 * n)] if m else [(system.A, n, 0)]
    if m:
        blocks += [(system.C, 2 * n, 0), (system.D, 2 * n, 2 * n)]
    for kernel, row0, col0 in blocks:
        rows, cols = kernel.shape
        for i in range(rows):
            for j in range(cols):
                scalar = entry_kernel(kernel, i, j)
                if scalar.atoms or scalar.pieces:
                    labels[row0 + i][col0 + j] = scalar
    tags = tuple(f"x{i + 1}" for i in range(n)) + tuple(f"w{i + 1}" for i in range(n)) \
        + tuple(f"y{i + 1}" for i in range(m))
    return BlockDiagram(labels, tags)


def adjacency(diagram):
    """Boolean matrix of the edges that are not strictly causal.

    Entry (i, j) is True iff label j -> i carries a nonzero point mass at
    t = 0; label weights are constructed values, so the test is exact.
    """
    size = diagram.size
    out = np.zeros((size, size), dtype=bool)
    for i in range(size):
        for j in range(size):
            lab = diagram.labels[i][j]
            if isinstance(lab, DelayKernel):
                out[i, j] = bool(atom_at_zero(lab).any())
    return out


def _cycle_through(adj, start):
    """Cycle start -> ... -> start in DFS order, or None."""
    size = adj.shape[0]
    parent = {}
    stack = [start]
    seen = set()
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        for v in range(size - 1, -1, -1):  # reversed so the stack pops ascending
            if not adj[v, u]:
                continue
            if v == start:
                path = [start, u]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                return tuple(reversed(path))
            if v not in seen:
                parent[v] = u
                stack.append(v)
    return None


def causality_check(diagram):
    """Search for a causality loop; report nilpotency degree when none exists.

    The reported cycle starts at the smallest vertex lying on any cycle and
    follows DFS order from there.
    """
    adj = adjacency(diagram)
    size = diagram.size
    for start in range(size):
        cycle = _cycle_through(adj, start)
        if cycle is not None:
            return CausalityReport(False, cycle, None)
    power = adj.copy()
    index = 1
    while power.any() and index <= size:
        power = (power.astype(int) @ adj.astype(int)) > 0
        index += 1
    return CausalityReport(True, None, index)


def _fmt_scalar(value):
    if value.imag == 0:
        return f"{value.real:g}"
    return f"{value.real:g}{value.imag:+g}i"


def _label_text(label):
    if label is INTEGRATOR:
        return "e"
    parts = []
    for atom in label.atoms:
        coef = atom.weight[0, 0]
        prefix = "" if coef == 1 else _fmt_scalar(coef) + "*"
        parts.append(f"{prefix}delta({atom.location:g})")
    for piece in label.pieces:
        kind = "poly" if hasattr(piece, "coeffs") else "exp"
        parts.append(f"{kind}[{piece.a:g},{piece.b:g}]")
    return " + ".join(parts)


def to_dot(diagram):
    """Deterministic DOT text: solid edges carry mass at t = 0, dashed do not."""
    lines = ["digraph blockdiagram {", "  rankdir=LR;"]
    for tag in diagram.tags:
        lines.append(f'  "{tag}";')
    strict = adjacency(diagram)
    edges = []
    for j in range(diagram.size):
        for i in range(diagram.size):
            lab = diagram.labels[i][j]
            if lab is None:
                continue
            style = "solid" if strict[i, j] else "dashed"
            edges.append((j, i, style, _label_text(lab)))
    for j, i, style, text in sorted(edges, key=lambda e: (e[0], e[1])):
        lines.append(
            f'  "{diagram.tags[j]}" -> "{diagram.tags[i]}" [style={style}, label="{text}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
