"""ForceAtlas2 force-directed layout.

The force model follows the published ForceAtlas2 design on the undirected
merged view of the graph:

* attraction along each edge, linear in distance and scaled by
  ``weight ** edge_weight_influence``;
* degree-mass repulsion between every node pair,
  ``kr * (deg(u)+1) * (deg(v)+1) / d``;
* constant-magnitude gravity ``kg * (deg(u)+1)`` toward the origin;
* the swinging/traction adaptive speed scheme, with the per-step speed
  rise capped so the global speed can never explode.

All forces of a step are computed from the previous frame and applied
synchronously, so a (graph, config, seed) triple replays bit-identically
regardless of traversal order. Repulsion is either an exact vectorized
pairwise sum or a Barnes-Hut quadtree approximation; a minimum-distance
guard keeps every division finite even for coincident points.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .model import Handle, InteractionGraph, UndirectedView, undirected_view

_EPS_DIST = 1e-9
_MAX_TREE_DEPTH = 48
_MIN_SPEED_EFFICIENCY = 0.05


@dataclass(frozen=True)
class LayoutConfig:
    scaling_kr: float = 2.0
    gravity_kg: float = 1.0
    edge_weight_influence: float = 1.0
    barnes_hut: bool | None = None  # None: auto, on for n > 1000
    theta: float = 1.2
    jitter_tolerance: float = 1.0
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.scaling_kr <= 0:
            raise ValueError("scaling_kr must be positive")
        if self.gravity_kg < 0 or self.edge_weight_influence < 0:
            raise ValueError("gravity_kg and edge_weight_influence must be non-negative")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.jitter_tolerance <= 0:
            raise ValueError("jitter_tolerance must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")

    def use_barnes_hut(self, node_count: int) -> bool:
        if self.barnes_hut is None:
            return node_count > 1000
        return self.barnes_hut


@dataclass(frozen=True)
class LayoutFrame:
    """Node positions plus the adaptive-speed state carried between steps."""

    positions: dict[Handle, tuple[float, float]]
    iteration: int = 0
    global_speed: float = 1.0
    speed_efficiency: float = 1.0
    prev_forces: dict[Handle, tuple[float, float]] = field(default_factory=dict)


def init_layout(graph: InteractionGraph | UndirectedView, seed: int) -> LayoutFrame:
    """Seeded uniform positions in a square centered on the origin."""
    nodes = sorted(_as_view(graph).nodes, key=lambda h: h.value)
    rng = random.Random(seed)
    side = max(1.0, math.sqrt(max(len(nodes), 1)))
    positions = {
        h: (rng.uniform(-side / 2, side / 2), rng.uniform(-side / 2, side / 2))
        for h in nodes
    }
    return LayoutFrame(positions=positions)


def _as_view(graph: InteractionGraph | UndirectedView) -> UndirectedView:
    if isinstance(graph, UndirectedView):
        return graph
    return undirected_view(graph)


class _Arrays:
    """Graph constants: sorted nodes, masses, and edge index arrays."""

    __slots__ = ("nodes", "index", "mass", "edge_u", "edge_v", "edge_f")

    def __init__(self, view: UndirectedView, edge_weight_influence: float):
        self.nodes = sorted(view.nodes, key=lambda h: h.value)
        self.index = {h: i for i, h in enumerate(self.nodes)}
        self.mass = np.array(
            [1.0 + len(view.neighbors(h)) for h in self.nodes], dtype=np.float64
        )
        pairs = sorted(
            (self.index[u], self.index[v], w) for u, v, w in view.iter_pairs()
        )
        self.edge_u = np.array([p[0] for p in pairs], dtype=np.int64)
        self.edge_v = np.array([p[1] for p in pairs], dtype=np.int64)
        delta = edge_weight_influence
        weights = np.array([p[2] for p in pairs], dtype=np.float64)
        if delta == 1.0:
            self.edge_f = weights
        elif delta == 0.0:
            self.edge_f = np.ones_like(weights)
        else:
            self.edge_f = weights**delta


def _exact_repulsion(pos: np.ndarray, mass: np.ndarray, kr: float) -> np.ndarray:
    """Exact pairwise repulsion, chunked over rows to bound memory."""
    n = len(pos)
    forces = np.zeros_like(pos)
    chunk = max(1, min(n, 8_000_000 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = pos[start:stop, None, :] - pos[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        np.maximum(dist, _EPS_DIST, out=dist)
        factor = kr * (mass[start:stop, None] * mass[None, :]) / (dist * dist)
        rows = np.arange(start, stop)
        factor[rows - start, rows] = 0.0
        forces[start:stop] = (diff * factor[:, :, None]).sum(axis=1)
    return forces


def _segments(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Concatenate [start, start+count) ranges into one index array."""
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    ends = counts.cumsum()
    inner = np.arange(total) - np.repeat(ends - counts, counts)
    return np.repeat(starts, counts) + inner


class _QuadTree:
    """Flattened quadtree over 2D points, rebuilt each step.

    The tree is constructed level-synchronously: every cell of a depth is
    split in one batch of array operations, so the build stays cheap even
    when it runs every iteration. Cells live in parallel arrays; leaves
    index into ``leaf_points``, a permutation of node indices grouped by
    leaf. Coincident points that survive to the maximum depth share one
    multi-point leaf.
    """

    __slots__ = (
        "size", "com", "mass", "children", "is_leaf",
        "leaf_start", "leaf_count", "leaf_points",
    )

    def __init__(self, pos: np.ndarray, mass: np.ndarray):
        n = len(pos)
        mins = pos.min(axis=0)
        maxs = pos.max(axis=0)
        root_center = (mins + maxs) / 2.0
        root_half = float(max((maxs - mins).max() / 2.0, _EPS_DIST)) * 1.0000001

        g_size: list[np.ndarray] = []
        g_com: list[np.ndarray] = []
        g_mass: list[np.ndarray] = []
        g_children: list[np.ndarray] = []
        g_is_leaf: list[np.ndarray] = []
        g_leaf_start: list[np.ndarray] = []
        g_leaf_count: list[np.ndarray] = []
        leaf_chunks: list[np.ndarray] = []
        leaf_total = 0
        next_id = 1

        order = np.arange(n, dtype=np.int64)
        starts = np.zeros(1, dtype=np.int64)
        counts = np.array([n], dtype=np.int64)
        cx = np.array([root_center[0]])
        cy = np.array([root_center[1]])
        half = np.array([root_half])
        depth = 0

        while len(starts):
            ends = starts + counts
            m_ord = mass[order]
            cum_m = np.concatenate([[0.0], np.cumsum(m_ord)])
            cum_x = np.concatenate([[0.0], np.cumsum(m_ord * pos[order, 0])])
            cum_y = np.concatenate([[0.0], np.cumsum(m_ord * pos[order, 1])])
            c_mass = cum_m[ends] - cum_m[starts]
            c_com = np.stack(
                [(cum_x[ends] - cum_x[starts]) / c_mass,
                 (cum_y[ends] - cum_y[starts]) / c_mass],
                axis=1,
            )
            is_leaf = (counts == 1) | (depth >= _MAX_TREE_DEPTH)

            # Cell size: twice the largest point offset from the center of
            # mass. A cell containing the probe node can then never pass
            # the far test (theta <= 2), so no self-force sneaks in.
            all_pts = order[_segments(starts, counts)]
            owner_all = np.repeat(np.arange(len(starts)), counts)
            spread = np.sqrt(((pos[all_pts] - c_com[owner_all]) ** 2).sum(axis=1))
            bounds = np.concatenate([[0], np.cumsum(counts)[:-1]])
            c_size = 2.0 * np.maximum.reduceat(spread, bounds)

            g_size.append(c_size)
            g_com.append(c_com)
            g_mass.append(c_mass)
            g_is_leaf.append(is_leaf)

            leaf_start = np.zeros(len(starts), dtype=np.int64)
            leaf_count = np.zeros(len(starts), dtype=np.int64)
            if is_leaf.any():
                lc = counts[is_leaf]
                leaf_start[is_leaf] = leaf_total + np.concatenate(
                    [[0], np.cumsum(lc)[:-1]]
                )
                leaf_count[is_leaf] = lc
                leaf_chunks.append(order[_segments(starts[is_leaf], counts[is_leaf])])
                leaf_total += int(lc.sum())
            g_leaf_start.append(leaf_start)
            g_leaf_count.append(leaf_count)

            children = np.full((len(starts), 4), -1, dtype=np.int64)
            sub = ~is_leaf
            if not sub.any():
                g_children.append(children)
                break

            sub_rows = np.flatnonzero(sub)
            sel = _segments(starts[sub], counts[sub])
            pts = order[sel]
            owner = np.repeat(np.arange(len(sub_rows)), counts[sub])
            quad = (pos[pts, 0] >= cx[sub][owner]).astype(np.int64) + 2 * (
                pos[pts, 1] >= cy[sub][owner]
            ).astype(np.int64)
            key = owner * 4 + quad
            perm = np.argsort(key, kind="stable")
            order[sel] = pts[perm]
            key_sorted = key[perm]
            uniq, first, child_counts = np.unique(
                key_sorted, return_index=True, return_counts=True
            )
            child_ids = next_id + np.arange(len(uniq), dtype=np.int64)
            next_id += len(uniq)
            children[sub_rows[uniq // 4], uniq % 4] = child_ids
            g_children.append(children)

            h2 = half[sub] / 2.0
            off = np.array([[-1, -1], [1, -1], [-1, 1], [1, 1]], dtype=np.float64)
            parent = uniq // 4
            starts = sel[first]
            counts = child_counts
            cx = cx[sub][parent] + off[uniq % 4, 0] * h2[parent]
            cy = cy[sub][parent] + off[uniq % 4, 1] * h2[parent]
            half = h2[parent]
            depth += 1

        self.size = np.concatenate(g_size)
        self.com = np.concatenate(g_com)
        self.mass = np.concatenate(g_mass)
        self.children = np.concatenate(g_children)
        self.is_leaf = np.concatenate(g_is_leaf)
        self.leaf_start = np.concatenate(g_leaf_start)
        self.leaf_count = np.concatenate(g_leaf_count)
        self.leaf_points = (
            np.concatenate(leaf_chunks) if leaf_chunks else np.zeros(0, dtype=np.int64)
        )


def _bh_repulsion(
    pos: np.ndarray, mass: np.ndarray, kr: float, theta: float
) -> np.ndarray:
    """Barnes-Hut approximate repulsion.

    A cell is aggregated into a single point at its center of mass when
    ``distance * theta`` exceeds the cell size; otherwise its children
    are visited. Leaves are evaluated exactly with the node itself
    excluded.
    """
    n = len(pos)
    forces = np.zeros_like(pos)
    if n < 2:
        return forces
    tree = _QuadTree(pos, mass)

    nodes = np.arange(n, dtype=np.int64)
    cells = np.zeros(n, dtype=np.int64)
    while len(nodes):
        p = pos[nodes]
        com = tree.com[cells]
        diff = p - com
        dist = np.sqrt((diff**2).sum(axis=1))
        np.maximum(dist, _EPS_DIST, out=dist)

        leaf = tree.is_leaf[cells]
        far = (dist * theta > tree.size[cells]) & ~leaf

        if far.any():
            idx = nodes[far]
            factor = kr * mass[idx] * tree.mass[cells[far]] / (dist[far] ** 2)
            np.add.at(forces, idx, diff[far] * factor[:, None])

        if leaf.any():
            li = nodes[leaf]
            lc = cells[leaf]
            counts = tree.leaf_count[lc]
            src = np.repeat(li, counts)
            tgt = tree.leaf_points[_segments(tree.leaf_start[lc], counts)]
            keep = src != tgt
            src, tgt = src[keep], tgt[keep]
            pd = pos[src] - pos[tgt]
            d = np.sqrt((pd**2).sum(axis=1))
            np.maximum(d, _EPS_DIST, out=d)
            factor = kr * mass[src] * mass[tgt] / (d * d)
            np.add.at(forces, src, pd * factor[:, None])

        descend = ~far & ~leaf
        if descend.any():
            kids = tree.children[cells[descend]]
            nodes = np.repeat(nodes[descend], 4)
            cells = kids.reshape(-1)
            keep = cells >= 0
            nodes, cells = nodes[keep], cells[keep]
        else:
            break
    return forces


def _compute_forces(
    pos: np.ndarray, arrays: _Arrays, config: LayoutConfig, barnes_hut: bool
) -> np.ndarray:
    if barnes_hut:
        forces = _bh_repulsion(pos, arrays.mass, config.scaling_kr, config.theta)
    else:
        forces = _exact_repulsion(pos, arrays.mass, config.scaling_kr)

    if config.gravity_kg > 0:
        dist = np.sqrt((pos**2).sum(axis=1))
        np.maximum(dist, _EPS_DIST, out=dist)
        forces -= pos / dist[:, None] * (config.gravity_kg * arrays.mass)[:, None]

    if len(arrays.edge_u):
        delta = pos[arrays.edge_u] - pos[arrays.edge_v]
        pull = delta * arrays.edge_f[:, None]
        np.add.at(forces, arrays.edge_u, -pull)
        np.add.at(forces, arrays.edge_v, pull)
    return forces


def _apply_forces(
    pos: np.ndarray,
    old_forces: np.ndarray,
    forces: np.ndarray,
    mass: np.ndarray,
    config: LayoutConfig,
    speed: float,
    speed_efficiency: float,
) -> tuple[np.ndarray, float, float]:
    """Swinging/traction adaptive speed update; returns (pos, speed, efficiency)."""
    n = len(pos)
    swing = np.sqrt(((old_forces - forces) ** 2).sum(axis=1))
    traction = np.sqrt(((old_forces + forces) ** 2).sum(axis=1)) / 2.0
    total_swing = max(float((mass * swing).sum()), 1e-30)
    total_traction = max(float((mass * traction).sum()), 1e-30)

    est_jt = 0.05 * math.sqrt(n)
    jt = config.jitter_tolerance * min(
        10.0, max(math.sqrt(est_jt), est_jt * total_traction / (n * n))
    )
    if total_swing / total_traction > 2.0:
        if speed_efficiency > _MIN_SPEED_EFFICIENCY:
            speed_efficiency *= 0.5
        jt = max(jt, config.jitter_tolerance)

    target_speed = jt * speed_efficiency * total_traction / total_swing
    if total_swing > jt * total_traction:
        if speed_efficiency > _MIN_SPEED_EFFICIENCY:
            speed_efficiency *= 0.7
    elif speed < 1000.0:
        speed_efficiency *= 1.3
    # Rise is capped at +50% per step, well inside the 10x runaway guard.
    speed = max(speed + min(target_speed - speed, 0.5 * speed), 1e-30)

    factor = speed / (1.0 + np.sqrt(speed * mass * swing))
    new_pos = pos + forces * factor[:, None]
    if not np.isfinite(new_pos).all():
        raise ArithmeticError("layout produced a non-finite coordinate")
    return new_pos, speed, speed_efficiency


def _frame_to_state(
    frame: LayoutFrame, arrays: _Arrays
) -> tuple[np.ndarray, np.ndarray]:
    try:
        pos = np.array([frame.positions[h] for h in arrays.nodes], dtype=np.float64)
    except KeyError as exc:
        raise ValueError(f"frame is missing a position for node {exc.args[0]}") from exc
    if frame.prev_forces:
        old = np.array(
            [frame.prev_forces.get(h, (0.0, 0.0)) for h in arrays.nodes],
            dtype=np.float64,
        )
    else:
        old = np.zeros_like(pos)
    return pos, old


def _state_to_frame(
    arrays: _Arrays,
    pos: np.ndarray,
    forces: np.ndarray,
    iteration: int,
    speed: float,
    speed_efficiency: float,
) -> LayoutFrame:
    return LayoutFrame(
        positions={h: (float(x), float(y)) for h, (x, y) in zip(arrays.nodes, pos)},
        iteration=iteration,
        global_speed=speed,
        speed_efficiency=speed_efficiency,
        prev_forces={h: (float(x), float(y)) for h, (x, y) in zip(arrays.nodes, forces)},
    )


def fa2_step(
    graph: InteractionGraph | UndirectedView,
    frame: LayoutFrame,
    config: LayoutConfig | None = None,
) -> LayoutFrame:
    """One synchronous layout step: forces from the old frame, applied at once."""
    config = config or LayoutConfig()
    view = _as_view(graph)
    if view.node_count == 0:
        return frame
    arrays = _Arrays(view, config.edge_weight_influence)
    pos, old_forces = _frame_to_state(frame, arrays)
    barnes_hut = config.use_barnes_hut(len(pos))
    forces = _compute_forces(pos, arrays, config, barnes_hut)
    new_pos, speed, eff = _apply_forces(
        pos, old_forces, forces, arrays.mass, config,
        frame.global_speed, frame.speed_efficiency,
    )
    return _state_to_frame(arrays, new_pos, forces, frame.iteration + 1, speed, eff)


def run_layout(
    graph: InteractionGraph | UndirectedView,
    config: LayoutConfig | None = None,
    frame: LayoutFrame | None = None,
) -> LayoutFrame:
    """Run ``config.iterations`` steps from a seeded (or given) initial frame."""
    config = config or LayoutConfig()
    view = _as_view(graph)
    if frame is None:
        frame = init_layout(view, config.seed)
    if view.node_count == 0 or config.iterations == 0:
        return frame

    arrays = _Arrays(view, config.edge_weight_influence)
    pos, old_forces = _frame_to_state(frame, arrays)
    barnes_hut = config.use_barnes_hut(len(pos))
    speed = frame.global_speed
    eff = frame.speed_efficiency
    forces = old_forces
    for _ in range(config.iterations):
        forces = _compute_forces(pos, arrays, config, barnes_hut)
        pos, speed, eff = _apply_forces(
            pos, old_forces, forces, arrays.mass, config, speed, eff
        )
        old_forces = forces
    return _state_to_frame(
        arrays, pos, forces, frame.iteration + config.iterations, speed, eff
    )


def repulsion_forces(
    graph: InteractionGraph | UndirectedView,
    frame: LayoutFrame,
    config: LayoutConfig | None = None,
    barnes_hut: bool = False,
) -> dict[Handle, tuple[float, float]]:
    """Repulsion-only force field for one frame; exact or Barnes-Hut.

    Exposed so the approximation error of the quadtree is directly
    observable against the exact pairwise sum.
    """
    config = config or LayoutConfig()
    view = _as_view(graph)
    arrays = _Arrays(view, config.edge_weight_influence)
    pos, _ = _frame_to_state(frame, arrays)
    if barnes_hut:
        forces = _bh_repulsion(pos, arrays.mass, config.scaling_kr, config.theta)
    else:
        forces = _exact_repulsion(pos, arrays.mass, config.scaling_kr)
    return {h: (float(x), float(y)) for h, (x, y) in zip(arrays.nodes, forces)}
