"""Axis-aligned box geometry.

Boxes are the universal set representation here: working zones, data-driven
partitions, and abstraction cells are all boxes or unions of boxes.
Membership is half-open (lower edge closed, upper edge open) except on upper
faces flagged as closed, which is how the outermost working-zone faces keep
boundary points inside the tiling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned interval vector with strictly positive side lengths.

    ``closed_hi[k]`` marks dimension k's upper face as closed for membership
    tests; bisection propagates these flags so a tiling of a zone stays an
    exact partition of it.
    """

    lo: np.ndarray
    hi: np.ndarray
    closed_hi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        lo = _freeze(np.asarray(self.lo, dtype=float))
        hi = _freeze(np.asarray(self.hi, dtype=float))
        if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
            raise ValueError(f"box bounds must be 1-D vectors of equal length, got {lo.shape} and {hi.shape}")
        if lo.size == 0:
            raise ValueError("box must have at least one dimension")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("box bounds must be finite")
        bad = np.nonzero(~(lo < hi))[0]
        if bad.size:
            k = int(bad[0])
            raise ValueError(f"degenerate box: dimension {k} has lo={lo[k]!r} >= hi={hi[k]!r}")
        closed = self.closed_hi
        if closed is None:
            closed = np.zeros(lo.shape, dtype=bool)
        else:
            closed = np.asarray(closed, dtype=bool)
            if closed.shape != lo.shape:
                raise ValueError("closed_hi mask must match box dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "closed_hi", _freeze(closed))

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x) -> bool:
        """Half-open membership: lo <= x < hi, closed on flagged upper faces."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.lo.shape:
            raise ValueError(f"point of dimension {x.size} tested against box of dimension {self.dim}")
        above = (x < self.hi) | (self.closed_hi & (x == self.hi))
        return bool(np.all((self.lo <= x) & above))

    def intersect(self, other: Box) -> Box | None:
        """Componentwise intersection; zero-width or inverted results are empty."""
        if self.dim != other.dim:
            raise ValueError(f"cannot intersect boxes of dimensions {self.dim} and {other.dim}")
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(hi <= lo):
            return None
        # upper-face closure follows whichever box supplied the tighter bound
        closed = np.where(
            self.hi < other.hi, self.closed_hi,
            np.where(other.hi < self.hi, other.closed_hi, self.closed_hi & other.closed_hi),
        )
        return Box(lo, hi, closed)

    def bisect(self, j: int) -> tuple[Box, Box]:
        """Split at the midpoint of dimension j.

        The lower child's new upper face is open (points on the cut belong to
        the upper child); the upper child inherits this box's closure flag.
        """
        if not 0 <= j < self.dim:
            raise ValueError(f"dimension {j} out of range for box of dimension {self.dim}")
        mid = 0.5 * (self.lo[j] + self.hi[j])
        lo_hi = self.hi.copy()
        lo_hi[j] = mid
        lo_closed = self.closed_hi.copy()
        lo_closed[j] = False
        hi_lo = self.lo.copy()
        hi_lo[j] = mid
        return Box(self.lo, lo_hi, lo_closed), Box(hi_lo, self.hi, self.closed_hi)

    def distance_linf(self, x) -> float:
        """L-infinity distance from a point to this box (0 when inside)."""
        x = np.asarray(x, dtype=float)
        gap = np.maximum(np.maximum(self.lo - x, x - self.hi), 0.0)
        return float(gap.max())

    def to_dict(self) -> dict:
        return {
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "closed_hi": self.closed_hi.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Box:
        return cls(np.asarray(d["lo"], dtype=float), np.asarray(d["hi"], dtype=float),
                   np.asarray(d.get("closed_hi", np.zeros(len(d["lo"]), dtype=bool)), dtype=bool))

    def __repr__(self) -> str:
        parts = "x".join(f"[{l:g},{h:g}{']' if c else ')'}" for l, h, c in zip(self.lo, self.hi, self.closed_hi))
        return f"Box({parts})"


def membership_matrix(boxes, points: np.ndarray) -> np.ndarray:
    """Boolean (n_points, n_boxes) matrix of half-open box membership."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.stack([b.lo for b in boxes])            # (n_boxes, dim)
    hi = np.stack([b.hi for b in boxes])
    closed = np.stack([b.closed_hi for b in boxes])
    p = points[:, None, :]                          # (n_points, 1, dim)
    above = (p < hi[None]) | (closed[None] & (p == hi[None]))
    return np.all((lo[None] <= p) & above, axis=2)
