"""Single-hidden-layer ReLU extreme learning machine.

The hidden layer is random and fixed (uniform weights on [-1, 1] from a
seeded generator); only the linear output layer is trained, by a closed-form
least-squares solve. Keeping the solve closed-form is what makes per-network
training time meaningful to compare against a large monolithic network.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset

DEFAULT_RIDGE = 1e-8


class SingularSystemError(RuntimeError):
    """Least-squares system is rank deficient and no ridge was requested."""


def relu(t: np.ndarray) -> np.ndarray:
    return np.maximum(t, 0.0)


@dataclass(frozen=True, eq=False)
class ElmNetwork:
    """Fixed random hidden layer plus a solved linear readout."""

    w_in: np.ndarray   # (hidden_count, n_in)
    b_in: np.ndarray   # (hidden_count,)
    w_out: np.ndarray  # (n_out, hidden_count)
    hidden_count: int
    seed: int

    def __post_init__(self):
        # contiguous layout so reloaded weights reproduce products bit-for-bit
        w_in = np.ascontiguousarray(np.asarray(self.w_in, dtype=float))
        b_in = np.ascontiguousarray(np.asarray(self.b_in, dtype=float))
        w_out = np.ascontiguousarray(np.asarray(self.w_out, dtype=float))
        if w_in.shape != (self.hidden_count, w_in.shape[1]) or b_in.shape != (self.hidden_count,):
            raise ValueError("hidden layer shapes inconsistent with hidden_count")
        if w_out.shape[1] != self.hidden_count:
            raise ValueError("w_out must have hidden_count columns")
        for a in (w_in, b_in, w_out):
            a.setflags(write=False)
        object.__setattr__(self, "w_in", w_in)
        object.__setattr__(self, "b_in", b_in)
        object.__setattr__(self, "w_out", w_out)

    @property
    def n_in(self) -> int:
        return self.w_in.shape[1]

    @property
    def n_out(self) -> int:
        return self.w_out.shape[0]

    def hidden(self, z: np.ndarray) -> np.ndarray:
        """ReLU hidden activations for a batch of inputs, shape (n, hidden)."""
        return relu(z @ self.w_in.T + self.b_in)

    def to_dict(self) -> dict:
        return {
            "hidden_count": self.hidden_count,
            "seed": self.seed,
            "w_in": self.w_in.tolist(),
            "b_in": self.b_in.tolist(),
            "w_out": self.w_out.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ElmNetwork:
        return cls(
            w_in=np.asarray(d["w_in"], dtype=float),
            b_in=np.asarray(d["b_in"], dtype=float),
            w_out=np.asarray(d["w_out"], dtype=float),
            hidden_count=int(d["hidden_count"]),
            seed=int(d["seed"]),
        )


def init_elm(n_in: int, n_out: int, hidden_count: int, seed: int) -> ElmNetwork:
    """Fresh network: hidden weights i.i.d. uniform on [-1, 1], zero readout."""
    if n_in < 1 or n_out < 1 or hidden_count < 1:
        raise ValueError("n_in, n_out, and hidden_count must be positive")
    rng = np.random.default_rng(seed)
    w_in = rng.uniform(-1.0, 1.0, size=(hidden_count, n_in))
    b_in = rng.uniform(-1.0, 1.0, size=hidden_count)
    w_out = np.zeros((n_out, hidden_count))
    return ElmNetwork(w_in, b_in, w_out, hidden_count, int(seed))


def fit_output_weights(net: ElmNetwork, data: Dataset, ridge: float = DEFAULT_RIDGE) -> ElmNetwork:
    """Solve the readout: argmin ||H W^T - Y||_F^2 + ridge ||W||_F^2.

    H is the ReLU hidden matrix of the dataset. ridge > 0 is solved through
    the augmented least-squares system, ridge = 0 through a plain SVD solve
    that rejects rank-deficient H.
    """
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    if data.n_x != net.n_out or data.n_x + data.n_u != net.n_in:
        raise ValueError(
            f"dataset dimensions (n_x={data.n_x}, n_u={data.n_u}) do not match "
            f"network (n_in={net.n_in}, n_out={net.n_out})"
        )
    h = net.hidden(data.z)
    y = data.y
    if ridge == 0.0:
        w_t, _, rank, _ = np.linalg.lstsq(h, y, rcond=None)
        if rank < net.hidden_count:
            raise SingularSystemError(
                f"hidden matrix rank {rank} < {net.hidden_count}; retry with ridge > 0"
            )
    else:
        a = np.vstack([h, np.sqrt(ridge) * np.eye(net.hidden_count)])
        b = np.vstack([y, np.zeros((net.hidden_count, net.n_out))])
        w_t, _, _, _ = np.linalg.lstsq(a, b, rcond=None)
    return replace(net, w_out=w_t.T)


def predict(net: ElmNetwork, z) -> np.ndarray:
    """y = w_out . ReLU(w_in . z + b_in) for a single input vector."""
    z = np.asarray(z, dtype=float)
    if z.shape != (net.n_in,):
        raise ValueError(f"input of shape {z.shape} fed to network with n_in={net.n_in}")
    return net.w_out @ relu(net.w_in @ z + net.b_in)


def predict_batch(net: ElmNetwork, z: np.ndarray) -> np.ndarray:
    """Vectorized predict over rows of z, shape (n, n_in) -> (n, n_out)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != net.n_in:
        raise ValueError(f"batch of shape {z.shape} fed to network with n_in={net.n_in}")
    return net.hidden(z) @ net.w_out.T

def mse(net: ElmNetwork, data: Dataset) -> float:
    """Mean squared prediction error: (1/n) sum ||y_hat - y||^2."""
    err = predict_batch(net, data.z) - data.y
    return float(np.mean(np.sum(err * err, axis=1)))
