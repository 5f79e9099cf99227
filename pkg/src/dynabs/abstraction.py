"""Transition-system abstraction of a hybrid model.

Traces sampled from the model give the state density; maximum-entropy
partitioning of the visited states gives the cells; per-cell interval
reachability gives the transition relation. An explicit exit sink absorbs
behavior that leaves the working zone, keeping the relation total.
"""

from __future__ import annotations

import datetime
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import WorkingZone
from .geometry import Box, membership_matrix
from .hybrid import HybridModel
from .partition import me_partition
from .reach import cell_successor_box

TS_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Trace:
    """One sampled run: states inside the zone, step-aligned inputs.

    `exited` marks runs whose next state left the zone; the out-of-zone
    state itself is not stored.
    """

    states: np.ndarray            # (m + 1, n_x)
    inputs: np.ndarray | None     # (m, n_u) when the model takes inputs
    start_k: int = 0
    exited: bool = False

    def __len__(self) -> int:
        return self.states.shape[0]

    def entries(self):
        """Yield (step index, state, input-or-None) triples."""
        m = self.states.shape[0]
        for t in range(m):
            u = None
            if self.inputs is not None and t < self.inputs.shape[0]:
                u = self.inputs[t]
            yield self.start_k + t, self.states[t], u


@dataclass(frozen=True, eq=False)
class TraceSet:
    traces: tuple[Trace, ...]

    def __len__(self) -> int:
        return len(self.traces)

    @property
    def all_states(self) -> np.ndarray:
        return np.concatenate([t.states for t in self.traces])


def sample_traces(model: HybridModel, L: int, M: int, seed: int, input_policy=None) -> TraceSet:
    """L traces of up to M steps with uniform random initial states.

    Inputs (when the model takes any) are drawn uniformly over the input
    bounds at every step, unless `input_policy(rng, states, step)` is given
    to supply them instead. A trace whose successor leaves the zone stops
    there and is marked exited. Fully deterministic for a given seed.
    """
    if L < 1 or M < 1:
        raise ValueError("need L >= 1 traces and M >= 1 steps")
    omega = model.zone.omega
    n_u = model.zone.n_u
    rng = np.random.default_rng(seed)

    x = rng.uniform(omega.lo, omega.hi, size=(L, omega.dim))
    states = np.empty((L, M + 1, omega.dim))
    states[:, 0] = x
    inputs = np.empty((L, M, n_u)) if n_u > 0 else None
    length = np.zeros(L, dtype=int)  # steps actually taken per trace
    exited = np.zeros(L, dtype=bool)
    alive = np.ones(L, dtype=bool)

    for t in range(M):
        if n_u > 0:
            ib = model.zone.input_bounds
            if input_policy is None:
                u = rng.uniform(ib.lo, ib.hi, size=(L, n_u))
            else:
                u = np.asarray(input_policy(rng, x, t), dtype=float)
            inputs[:, t] = u
        if not alive.any():
            break
        rows = np.nonzero(alive)[0]
        z = x[rows] if n_u == 0 else np.concatenate([x[rows], u[rows]], axis=1)
        ids, _ = model.locate_batch(x[rows])
        nxt = model.predict_located(z, ids)
        inside = np.all((nxt >= omega.lo) & (nxt <= omega.hi), axis=1)
        inside &= np.isfinite(nxt).all(axis=1)
        leaving = rows[~inside]
        exited[leaving] = True
        alive[leaving] = False
        staying = rows[inside]
        states[staying, t + 1] = nxt[inside]
        length[staying] = t + 1
        x[staying] = nxt[inside]

    traces = tuple(
        Trace(
            states=states[i, : length[i] + 1].copy(),
            inputs=inputs[i, : length[i]].copy() if n_u > 0 else None,
            exited=bool(exited[i]),
        )
        for i in range(L)
    )
    return TraceSet(traces)


def build_cells(zone: WorkingZone, traces: TraceSet, epsilon: float) -> list[Box]:
    """Cells = maximum-entropy partition of all visited states."""
    if len(traces) == 0:
        raise ValueError("trace set is empty")
    return me_partition(zone, traces.all_states, epsilon).boxes


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    """Finite cells over the zone plus a total boolean transition relation.

    `relation` is (N+1) x (N+1): index N is the exit sink, which only
    self-loops. Cell ids are 1-based; the sink's state id is N+1.
    """

    zone: WorkingZone
    cells: tuple[Box, ...]
    relation: np.ndarray
    initial: int | None = None

    def __post_init__(self):
        rel = np.asarray(self.relation, dtype=bool)
        n = len(self.cells) + 1
        if rel.shape != (n, n):
            raise ValueError(f"relation must be {n}x{n} including the exit sink, got {rel.shape}")
        if not rel.any(axis=1).all():
            raise ValueError("relation must be total: some row has no successor")
        if not rel[n - 1, n - 1] or rel[n - 1, : n - 1].any():
            raise ValueError("exit sink must have exactly a self-loop")
        rel.setflags(write=False)
        object.__setattr__(self, "relation", rel)
        if self.initial is not None and not 1 <= self.initial <= len(self.cells):
            raise ValueError(f"initial cell id {self.initial} out of range 1..{len(self.cells)}")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_states(self) -> int:
        return len(self.cells) + 1

    @property
    def exit_id(self) -> int:
        """1-based state id of the exit sink."""
        return len(self.cells) + 1

    def state_label(self, state_id: int) -> str:
        return "EXIT" if state_id == self.exit_id else f"Q{state_id}"

    def cell_index_of(self, x) -> int | None:
        """1-based id of the cell containing x, or None when x is outside."""
        for i, c in enumerate(self.cells):
            if c.contains(x):
                return i + 1
        return None

    def cell_indices_of(self, states: np.ndarray) -> np.ndarray:
        """Vectorized cell lookup; 0 marks out-of-zone points."""
        member = membership_matrix(self.cells, states)
        ids = np.where(member.any(axis=1), np.argmax(member, axis=1) + 1, 0)
        return ids

    def edge_count(self) -> int:
        return int(self.relation.sum())

    def to_dict(self) -> dict:
        return {
            "format_version": TS_FORMAT_VERSION,
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "zone": self.zone.to_dict(),
            "cells": [c.to_dict() for c in self.cells],
            "relation": self.relation.astype(int).tolist(),
            "exit_sink": True,
            "initial": self.initial,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def from_dict(cls, d: dict) -> TransitionSystem:
        if "format_version" not in d:
            raise ValueError("transition-system document missing format_version")
        return cls(
            zone=WorkingZone.from_dict(d["zone"]),
            cells=tuple(Box.from_dict(c) for c in d["cells"]),
            relation=np.asarray(d["relation"], dtype=bool),
            initial=d.get("initial"),
        )

    @classmethod
    def load(cls, path) -> TransitionSystem:
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def compute_transitions(
    model: HybridModel, cells, initial: int | None = None, workers: int = 1
) -> TransitionSystem:
    """Relation R over the cells: R(i, j) iff the one-step enclosure of cell
    i meets cell j with positive width; enclosures extending beyond the zone
    get an edge to the exit sink.

    Each region piece of the enclosure is tested against the cells
    separately, which drops spurious transitions the hull would add.
    """
    cells = tuple(cells)
    n = len(cells)
    omega = model.zone.omega

    def row(i: int) -> np.ndarray:
        r = np.zeros(n + 1, dtype=bool)
        result = cell_successor_box(model, cells[i])
        for piece in result.pieces:
            for j, cj in enumerate(cells):
                if not r[j] and piece.output.overlaps_box(cj):
                    r[j] = True
            if not piece.output.within(omega):
                r[n] = True
        if not r.any():
            # unreachable for padded enclosures; keep the relation total
            fallback = next(
                (j for j, cj in enumerate(cells) if cj.contains(np.clip(result.output.center, omega.lo, omega.hi))),
                None,
            )
            r[fallback if fallback is not None else n] = True
        return r

    relation = np.zeros((n + 1, n + 1), dtype=bool)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]
    for i, r in enumerate(rows):
        relation[i] = r
    relation[n, n] = True
    return TransitionSystem(zone=model.zone, cells=cells, relation=relation, initial=initial)


def export_dot(ts: TransitionSystem) -> str:
    """Render the transition graph as DOT with stable row-major ordering."""
    lines = ["digraph transition_system {", "  rankdir=LR;"]
    for i in range(1, ts.n_cells + 1):
        attrs = ["shape=box"]
        if ts.initial == i:
            attrs.append("peripheries=2")
        lines.append(f"  Q{i} [{', '.join(attrs)}];")
    lines.append("  EXIT [shape=doublecircle];")
    labels = [ts.state_label(i) for i in range(1, ts.n_states + 1)]
    for i in range(ts.n_states):
        for j in range(ts.n_states):
            if ts.relation[i, j]:
                lines.append(f"  {labels[i]} -> {labels[j]};")
    lines.append("}")
    return "\n".join(lines) + "\n"
