"""Inter-object relation graphs and graph-similarity rewards.

Nodes carry a category and a location (normalized 2D or metric 3D).  Edges
are implicit: every pair of nodes is connected, with attributes derived from
the two locations (Euclidean distance and direction of the displacement), so
only nodes ever need to be stored or sent over the wire.

Predicted and ground-truth nodes are put in correspondence per category by a
minimum-total-distance assignment.  The rewards are then:

* node reward: ``(1/N) * sum over matched pairs of exp(-lam_n * |x - x'|)``
  where ``N`` is the ground-truth node count, which is the same as weighting
  each category by ``n_c / N`` and averaging within it;
* edge reward: mean over unordered matched pairs of
  ``0.5 * (exp(-lam_d * |d - d'|) + exp(-dtheta))`` with ``dtheta`` the angle
  between the predicted and ground-truth displacement vectors;
* frame score: ``(node + edge) / 2`` (node alone when the ground truth has a
  single node), and the graph reward is the mean frame score.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Any, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .annotations import NormalizedPoint, SceneAnnotation, normalize_point
from .errors import EmptyFrameError, LengthMismatchError, NotARotationError

EXHAUSTIVE_LIMIT = 6


@dataclass(frozen=True)
class Node:
    node_id: str
    category: str
    location: NormalizedPoint


@dataclass(frozen=True)
class SceneGraph:
    nodes: tuple[Node, ...]
    frame: Optional[int] = None

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("a scene graph needs at least one node")
        dims = {len(n.location) for n in self.nodes}
        if len(dims) != 1 or dims.pop() not in (2, 3):
            raise ValueError("node locations must all be 2D or all 3D")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")

    @property
    def dim(self) -> int:
        return len(self.nodes[0].location)

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def locations(self) -> np.ndarray:
        return np.array([n.location for n in self.nodes], dtype=float)

    def distance(self, i: str, j: str) -> float:
        a, b = self.node(i).location, self.node(j).location
        return math.dist(a, b)

    def theta(self, i: str, j: str) -> float:
        """Direction of the displacement from ``i`` to ``j`` in (-pi, pi].

        For 3D graphs this is the azimuth in the x-y plane.
        """
        a, b = self.node(i).location, self.node(j).location
        t = math.atan2(b[1] - a[1], b[0] - a[0])
        return math.pi if t == -math.pi else t

    def edges(self) -> dict[tuple[str, str], tuple[float, float]]:
        """All off-diagonal ordered edges ``(i, j) -> (d_ij, theta_ij)``."""
        out = {}
        for a in self.nodes:
            for b in self.nodes:
                if a.node_id != b.node_id:
                    out[(a.node_id, b.node_id)] = (self.distance(a.node_id, b.node_id),
                                                   self.theta(a.node_id, b.node_id))
        return out

    def to_wire(self) -> dict:
        out: dict[str, Any] = {}
        if self.frame is not None:
            out["frame"] = self.frame
        out["nodes"] = [{"id": n.node_id, "category": n.category, "loc": list(n.location)}
                        for n in self.nodes]
        return out


def graph_from_wire(data: Any, frame: Optional[int] = None) -> SceneGraph:
    """Parse ``{"nodes": [{"id", "category", "loc"}]}``; raises ValueError on bad input."""
    if not isinstance(data, dict) or not isinstance(data.get("nodes"), list):
        raise ValueError("graph must be an object with a 'nodes' list")
    nodes = []
    for k, raw in enumerate(data["nodes"]):
        if not isinstance(raw, dict):
            raise ValueError(f"node {k} is not an object")
        category = raw.get("category")
        loc = raw.get("loc")
        if not isinstance(category, str):
            raise ValueError(f"node {k} has no category")
        if not isinstance(loc, list) or len(loc) not in (2, 3):
            raise ValueError(f"node {k} loc must have 2 or 3 coordinates")
        coords = []
        for v in loc:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"node {k} loc must be finite numbers")
            coords.append(float(v))
        node_id = raw.get("id", k)
        if isinstance(node_id, (dict, list)) or node_id is None:
            raise ValueError(f"node {k} id must be a scalar")
        nodes.append(Node(str(node_id), category, tuple(coords)))
    if frame is None and isinstance(data.get("frame"), int):
        frame = data["frame"]
    return SceneGraph(tuple(nodes), frame=frame)


def graph_from_frame(scene: SceneAnnotation, frame: int) -> SceneGraph:
    present = scene.tracks_at(frame)
    if not present:
        raise EmptyFrameError(f"no track in {scene.scene_id} observes frame {frame}")
    nodes = tuple(Node(t.object_id, t.category, normalize_point(o.center, scene)) for t, o in present)
    return SceneGraph(nodes, frame=frame)


# -- correspondence ------------------------------------------------------------


@dataclass(frozen=True)
class GraphMatch:
    pairs: tuple[tuple[str, str], ...] = ()
    unmatched_pred: tuple[str, ...] = ()
    unmatched_gt: tuple[str, ...] = ()


def _assign(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost assignment of rows to columns for a rectangular cost matrix."""
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        return []
    if max(n_rows, n_cols) > EXHAUSTIVE_LIMIT:
        rows, cols = linear_sum_assignment(cost)
        return list(zip(rows.tolist(), cols.tolist()))
    best, best_cost = None, math.inf
    if n_rows <= n_cols:
        for cols in itertools.permutations(range(n_cols), n_rows):
            c = sum(cost[r, cols[r]] for r in range(n_rows))
            if c < best_cost:
                best, best_cost = list(enumerate(cols)), c
    else:
        for rows in itertools.permutations(range(n_rows), n_cols):
            c = sum(cost[rows[k], k] for k in range(n_cols))
            if c < best_cost:
                best, best_cost = [(rows[k], k) for k in range(n_cols)], c
    return sorted(best)


def match_graphs(pred: SceneGraph, gt: SceneGraph) -> GraphMatch:
    by_cat_pred: dict[str, list[Node]] = defaultdict(list)
    by_cat_gt: dict[str, list[Node]] = defaultdict(list)
    for n in pred.nodes:
        by_cat_pred[n.category].append(n)
    for n in gt.nodes:
        by_cat_gt[n.category].append(n)

    pairs, unmatched_pred, unmatched_gt = [], [], []
    for cat in sorted(set(by_cat_pred) | set(by_cat_gt)):
        p_nodes, g_nodes = by_cat_pred.get(cat, []), by_cat_gt.get(cat, [])
        if p_nodes and g_nodes and len(p_nodes[0].location) == len(g_nodes[0].location):
            cost = np.array([[math.dist(p.location, g.location) for g in g_nodes] for p in p_nodes])
            assigned = _assign(cost)
        else:
            assigned = []
        used_p = {r for r, _ in assigned}
        used_g = {c for _, c in assigned}
        pairs.extend((p_nodes[r].node_id, g_nodes[c].node_id) for r, c in assigned)
        unmatched_pred.extend(p.node_id for k, p in enumerate(p_nodes) if k not in used_p)
        unmatched_gt.extend(g.node_id for k, g in enumerate(g_nodes) if k not in used_g)
    return GraphMatch(tuple(pairs), tuple(unmatched_pred), tuple(unmatched_gt))


# -- rewards -------------------------------------------------------------------


def _vector_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in [0, pi] between two displacement vectors.

    atan2(|u x v|, u . v) rather than arccos of the normalized dot product so
    that parallel vectors give exactly 0.
    """
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 and nv == 0.0:
        return 0.0
    if nu == 0.0 or nv == 0.0:
        return math.pi
    if len(u) == 2:
        cross = abs(u[0] * v[1] - u[1] * v[0])
    else:
        cross = float(np.linalg.norm(np.cross(u, v)))
    return math.atan2(cross, float(np.dot(u, v)))


def node_reward(pred: SceneGraph, gt: SceneGraph, match: GraphMatch, lam: float = 1.0) -> float:
    total = 0.0
    for p_id, g_id in match.pairs:
        total += math.exp(-lam * math.dist(pred.node(p_id).location, gt.node(g_id).location))
    return total / len(gt.nodes)


def edge_reward(pred: SceneGraph, gt: SceneGraph, match: GraphMatch, lam: float = 1.0) -> float:
    """Mean edge agreement over unordered matched pairs; 0.0 with fewer than two pairs."""
    pairs = match.pairs
    if len(pairs) < 2:
        return 0.0
    p_loc = {p: np.asarray(pred.node(p).location) for p, _ in pairs}
    g_loc = {g: np.asarray(gt.node(g).location) for _, g in pairs}
    terms = []
    for (pi, gi), (pj, gj) in itertools.combinations(pairs, 2):
        u = p_loc[pj] - p_loc[pi]
        v = g_loc[gj] - g_loc[gi]
        dd = abs(float(np.linalg.norm(u)) - float(np.linalg.norm(v)))
        terms.append(0.5 * (math.exp(-lam * dd) + math.exp(-_vector_angle(u, v))))
    return float(sum(terms) / len(terms))


def has_edges(match: GraphMatch) -> bool:
    return len(match.pairs) >= 2


def frame_score(pred: SceneGraph, gt: SceneGraph, lam_n: float = 1.0, lam_d: float = 1.0) -> float:
    """Per-frame graph similarity in [0, 1]."""
    match = match_graphs(pred, gt)
    rn = node_reward(pred, gt, match, lam_n)
    if len(gt.nodes) == 1:
        return rn
    return 0.5 * (rn + edge_reward(pred, gt, match, lam_d))


def graph_reward(pred_frames: Sequence[SceneGraph], gt_frames: Sequence[SceneGraph],
                 lam_n: float = 1.0, lam_d: float = 1.0) -> float:
    if len(pred_frames) != len(gt_frames):
        raise LengthMismatchError(f"{len(pred_frames)} predicted frames vs {len(gt_frames)} ground-truth frames")
    if not gt_frames:
        raise LengthMismatchError("need at least one frame")
    scores = [frame_score(p, g, lam_n, lam_d) for p, g in zip(pred_frames, gt_frames)]
    return float(sum(scores) / len(scores))


# -- rotations -----------------------------------------------------------------


def rotation_matrix_2d(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def check_rotation(rot: np.ndarray, tol: float = 1e-9) -> None:
    rot = np.asarray(rot, dtype=float)
    if rot.ndim != 2 or rot.shape[0] != rot.shape[1]:
        raise NotARotationError("rotation must be a square matrix")
    if np.linalg.norm(rot.T @ rot - np.eye(rot.shape[0])) > tol or np.linalg.det(rot) <= 0:
        raise NotARotationError("matrix is not orthonormal with positive determinant")


def rotate_graph(g: SceneGraph, rotation: float | np.ndarray,
                 center: Optional[Sequence[float]] = None) -> SceneGraph:
    """Apply a rotation (2D angle in radians, or a matrix) to every node location."""
    if np.isscalar(rotation):
        if g.dim != 2:
            raise NotARotationError("a scalar angle only rotates 2D graphs")
        rot = rotation_matrix_2d(float(rotation))
    else:
        rot = np.asarray(rotation, dtype=float)
    check_rotation(rot)
    if rot.shape[0] != g.dim:
        raise NotARotationError(f"{rot.shape[0]}D rotation applied to a {g.dim}D graph")
    c = np.zeros(g.dim) if center is None else np.asarray(center, dtype=float)
    nodes = tuple(
        replace(n, location=tuple((rot @ (np.asarray(n.location) - c) + c).tolist()))
        for n in g.nodes
    )
    return replace(g, nodes=nodes)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation in SO(dim) (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def select_graph_frames(scene: SceneAnnotation, k: int) -> list[int]:
    """``k`` uniformly spaced annotated frames (all of them when fewer exist)."""
    frames = scene.annotated_frames()
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(frames) <= k:
        return frames
    idx = np.round(np.linspace(0, len(frames) - 1, k)).astype(int)
    return [frames[i] for i in idx]


def ground_truth_graphs(scene: SceneAnnotation, k: int) -> list[SceneGraph]:
    return [graph_from_frame(scene, f) for f in select_graph_frames(scene, k)]
