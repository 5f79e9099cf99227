"""Maximum-entropy bisection of a working zone.

The zone is recursively bisected along the longest side of the widest
partition; a tentative split is kept only when it raises the Shannon entropy
of sample occupancy by at least the threshold epsilon. Partitions whose
tentative split fails are frozen and never revisited, which guarantees
termination and keeps the procedure deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, WorkingZone
from .geometry import Box

# Unconditional freeze for slivers: longest side below this fraction of the
# zone's extent. Guards against unbounded refinement when epsilon is 0.
MIN_SIDE_FRACTION = 1e-9


def shannon_entropy(counts) -> float:
    """H = -sum p_i ln p_i over occupancy fractions, with 0 ln 0 = 0."""
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1 or counts.size == 0:
        raise ValueError("counts must be a non-empty 1-D sequence")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    total = counts.sum()
    if total == 0:
        raise ValueError("at least one count must be positive")
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def select_bisection(boxes, active) -> tuple[int, int]:
    """Pick (partition, dimension) with the largest side length.

    Ties break toward the lowest partition index, then the lowest dimension.
    Indices are 0-based positions into `boxes`.
    """
    best = None
    for i in sorted(active):
        sides = boxes[i].sides
        j = int(np.argmax(sides))  # argmax takes the lowest dim on ties
        if best is None or sides[j] > best[0]:
            best = (float(sides[j]), i, j)
    if best is None:
        raise ValueError("active set is empty")
    return best[1], best[2]


@dataclass(frozen=True, eq=False)
class PartitionSet:
    """Disjoint boxes tiling the zone plus per-box sample assignments."""

    zone: WorkingZone
    boxes: list[Box]
    assignments: list[np.ndarray]  # per-box indices into the source data
    epsilon: float
    split_log: list[tuple[int, int, float, bool]] = field(default=None, repr=False)  # type: ignore[assignment]

    @property
    def counts(self) -> list[int]:
        return [int(a.size) for a in self.assignments]

    def __len__(self) -> int:
        return len(self.boxes)

    def to_dict(self) -> dict:
        return {
            "omega": self.zone.omega.to_dict(),
            "epsilon": self.epsilon,
            "boxes": [b.to_dict() for b in self.boxes],
            "counts": self.counts,
        }


def _xlogx(c: float) -> float:
    return c * np.log(c) if c > 0 else 0.0


def me_partition(zone: WorkingZone, data, epsilon: float) -> PartitionSet:
    """Maximum-entropy partitioning of the zone driven by sample density.

    Repeatedly bisects the widest active partition at its midpoint; the split
    is committed when the global entropy gain H(after) - H(before) reaches
    epsilon, otherwise the partition is frozen. Returns the final tiling with
    each sample assigned to exactly one box (half-open membership).

    `data` is a Dataset (its state coordinates are used) or a plain
    (n, n_x) array of points inside the zone.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if isinstance(data, Dataset):
        zone.check_dataset(data)
        states = data.states
    else:
        states = np.atleast_2d(np.asarray(data, dtype=float))
        if states.shape[1] != zone.n_x:
            raise ValueError(f"points have dimension {states.shape[1]}, zone has {zone.n_x}")
        inside = (states >= zone.omega.lo) & (states <= zone.omega.hi)
        if not inside.all():
            k = int(np.nonzero(~inside.all(axis=1))[0][0])
            raise ValueError(f"point {k} lies outside the working zone")

    n_total = states.shape[0]
    extent = zone.omega.sides
    # entries: [box, sample indices, active flag], in stable tiling order
    entries: list[list] = [[zone.omega, np.arange(n_total), True]]
    log: list[tuple[int, int, float, bool]] = []

    while True:
        active = [i for i, e in enumerate(entries) if e[2]]
        # freeze slivers before selection so they cannot be picked forever
        for i in active:
            if np.max(entries[i][0].sides / extent) < MIN_SIDE_FRACTION:
                entries[i][2] = False
        active = [i for i in active if entries[i][2]]
        if not active:
            break

        i, j = select_bisection([e[0] for e in entries], active)
        box, idx, _ = entries[i]
        mid = 0.5 * (box.lo[j] + box.hi[j])
        if not box.lo[j] < mid < box.hi[j]:  # midpoint collapse at float limits
            entries[i][2] = False
            continue
        lower_mask = states[idx, j] < mid
        c = idx.size
        c1 = int(lower_mask.sum())
        c2 = c - c1
        delta_h = (_xlogx(c) - _xlogx(c1) - _xlogx(c2)) / n_total if n_total else 0.0

        if delta_h >= epsilon:
            left, right = box.bisect(j)
            entries[i: i + 1] = [
                [left, idx[lower_mask], True],
                [right, idx[~lower_mask], True],
            ]
            log.append((i, j, delta_h, True))
        else:
            entries[i][2] = False
            log.append((i, j, delta_h, False))

    return PartitionSet(
        zone=zone,
        boxes=[e[0] for e in entries],
        assignments=[e[1] for e in entries],
        epsilon=float(epsilon),
        split_log=log,
    )
