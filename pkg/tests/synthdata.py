"""Synthetic datasets and fixture models shared across the test suite."""

from __future__ import annotations

import numpy as np

from dynabs import Box, Dataset, HybridModel, Region, WorkingZone, init_elm, me_partition, merge_and_learn


def swirl_step(x: np.ndarray, damping: float = 0.96, base_angle: float = 0.15, twist: float = 0.1) -> np.ndarray:
    """Contracting planar swirl: rotate by an angle that grows with radius."""
    r2 = (x * x).sum(axis=1, keepdims=True)
    th = base_angle + twist * r2
    c, s = np.cos(th), np.sin(th)
    return damping * np.concatenate(
        [c * x[:, :1] - s * x[:, 1:], s * x[:, :1] + c * x[:, 1:]], axis=1
    )


def swirl_dataset(n_samples: int = 2000, seed: int = 1, **swirl_kwargs) -> Dataset:
    """One-step samples harvested from swirl trajectories inside [-1, 1]^2."""
    rng = np.random.default_rng(seed)
    steps = 100
    n_traj = max(1, n_samples // steps)
    zs, ys = [], []
    for _ in range(n_traj):
        # initial L2 norm < 1 and the map is an L2 contraction, so every
        # visited state stays inside [-1, 1]^2
        x = rng.uniform(-0.7, 0.7, size=(1, 2))
        for _ in range(steps):
            nxt = swirl_step(x, **swirl_kwargs)
            zs.append(x[0])
            ys.append(nxt[0])
            x = nxt
    z = np.asarray(zs)[:n_samples]
    y = np.asarray(ys)[:n_samples]
    return Dataset(2, 0, z, y)


def swirl_zone() -> WorkingZone:
    return WorkingZone(Box([-1.0, -1.0], [1.0, 1.0]))


def two_cluster_points(seed: int = 7, per_cluster: int = 100) -> np.ndarray:
    """Half below x1=0.5, half above; uniform within each half of [0,1]^2."""
    rng = np.random.default_rng(seed)
    left = np.column_stack([
        rng.uniform(0.0, 0.5, per_cluster),
        rng.uniform(0.0, 1.0, per_cluster),
    ])
    right = np.column_stack([
        rng.uniform(0.5, 1.0, per_cluster),
        rng.uniform(0.0, 1.0, per_cluster),
    ])
    return np.concatenate([left, right])


def two_cluster_dataset(seed: int = 7, per_cluster: int = 100) -> Dataset:
    pts = two_cluster_points(seed, per_cluster)
    return Dataset(2, 0, pts, 0.5 * pts)  # contraction toward the origin corner


def unit_zone() -> WorkingZone:
    return WorkingZone(Box([0.0, 0.0], [1.0, 1.0]))


def constant_net(c, n_in: int):
    """Network that outputs the constant vector c everywhere."""
    c = np.asarray(c, dtype=float)
    net = init_elm(n_in, c.size, 1, seed=0)
    w_in = np.zeros((1, n_in))
    b_in = np.ones(1)
    w_out = c.reshape(-1, 1)
    return type(net)(w_in, b_in, w_out, 1, 0)


def single_region_model(zone: WorkingZone, net, gamma: float = 0.0, epsilon: float = 0.0) -> HybridModel:
    return HybridModel(
        zone=zone,
        regions=(Region(1, (zone.omega,)),),
        networks=(net,),
        gamma=gamma,
        epsilon=epsilon,
    )


def split_region_model(zone: WorkingZone, nets, j: int = 0) -> HybridModel:
    """Two-region model: the zone bisected once along dimension j."""
    left, right = zone.omega.bisect(j)
    return HybridModel(
        zone=zone,
        regions=(Region(1, (left,)), Region(2, (right,))),
        networks=tuple(nets),
        gamma=0.0,
        epsilon=0.0,
    )


def fitted_swirl_model(seed: int = 0, n_samples: int = 2000, epsilon: float = 0.04,
                       gamma: float = 1.5e-5, **swirl_kwargs) -> tuple[HybridModel, Dataset]:
    data = swirl_dataset(n_samples, seed=seed + 1, **swirl_kwargs)
    zone = swirl_zone()
    parts = me_partition(zone, data, epsilon)
    model = merge_and_learn(parts, data, hidden_count=20, seed=seed, gamma=gamma)
    return model, data


def tiny_transition_system(relation, n_cells: int):
    """TransitionSystem over dummy 1-D unit cells with the given relation."""
    from dynabs import TransitionSystem

    zone = WorkingZone(Box([0.0], [float(n_cells)]))
    cells = tuple(
        Box([float(i)], [float(i + 1)], closed_hi=[i == n_cells - 1]) for i in range(n_cells)
    )
    return TransitionSystem(zone, cells, np.asarray(relation, dtype=bool))


def random_transition_system(rng, max_cells: int = 4):
    """Random total relation over up to max_cells cells plus the sink."""
    n = int(rng.integers(1, max_cells + 1))
    rel = rng.random((n + 1, n + 1)) < rng.uniform(0.15, 0.6)
    rel[n, :] = False
    rel[n, n] = True
    for i in range(n):
        if not rel[i].any():
            rel[i, int(rng.integers(n + 1))] = True
    return tiny_transition_system(rel, n)


def random_ctl_formula(rng, n_cells: int, depth: int):
    from dynabs.ctl import And, CellAtom, ExitAtom, Not, Or, TrueF, Unary, Until

    roll = rng.integers(0, 10) if depth > 0 else rng.integers(0, 3)
    if roll == 0:
        return TrueF()
    if roll == 1:
        return ExitAtom()
    if roll == 2:
        return CellAtom(int(rng.integers(1, n_cells + 1)))
    if roll == 3:
        return Not(random_ctl_formula(rng, n_cells, depth - 1))
    if roll == 4:
        return And(random_ctl_formula(rng, n_cells, depth - 1), random_ctl_formula(rng, n_cells, depth - 1))
    if roll == 5:
        return Or(random_ctl_formula(rng, n_cells, depth - 1), random_ctl_formula(rng, n_cells, depth - 1))
    if roll == 6:
        return Until(
            "E" if rng.integers(2) else "A",
            random_ctl_formula(rng, n_cells, depth - 1),
            random_ctl_formula(rng, n_cells, depth - 1),
        )
    op = ["EX", "AX", "EF", "AF", "EG", "AG"][int(rng.integers(6))]
    return Unary(op, random_ctl_formula(rng, n_cells, depth - 1))
