"""Verifiable reward functions and their composition into a total reward."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DimensionError
from .qa_gen import QAPair
from .response import ParsedResponse, parse_response
from .scene_graph import SceneGraph, frame_score

ANS_KIND = {"multi_choice": "mc", "numerical": "num", "point": "point", "iou_track": "iou"}


@dataclass(frozen=True)
class RewardConfig:
    omega: float = 0.2
    length_window: tuple[int, int] = (320, 512)
    graph_frames: int = 4
    lam_n: float = 1.0
    lam_d: float = 1.0
    answer_gate: float = 0.8

    def __post_init__(self):
        if self.omega < 0:
            raise ConfigError("omega: must be >= 0")
        if len(self.length_window) != 2 or self.length_window[0] > self.length_window[1]:
            raise ConfigError("length_window: need [l_min, l_max] with l_min <= l_max")
        if self.graph_frames < 1:
            raise ConfigError("graph_frames: must be >= 1")
        if self.lam_n <= 0 or self.lam_d <= 0:
            raise ConfigError("lam_n, lam_d: must be > 0")


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: float
    r_ans: float
    r_graph: float
    r_length: float
    r_total: float
    ans_kind: str
    answer_error: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


def reward_format(resp: ParsedResponse) -> float:
    return 1.0 if resp.format_ok else 0.0


def reward_multichoice(pred: Optional[str], gt: str) -> float:
    return 1.0 if pred is not None and pred == gt else 0.0


def reward_numerical(pred: float, gt: float) -> float:
    assert gt > 0, "numerical ground truth must be positive"
    if pred is None or not math.isfinite(pred):
        return 0.0
    return max(0.0, 1.0 - abs(pred - gt) / abs(gt))


def reward_point(pred: Sequence[float], gt: Sequence[float], lam: float = 1.0) -> float:
    if len(pred) != len(gt):
        raise DimensionError(f"{len(pred)}D prediction vs {len(gt)}D ground truth")
    return math.exp(-lam * math.dist(pred, gt))


def box_iou(a, b) -> float:
    """IoU of two axis-aligned boxes ``[min-corner, max-corner]`` of any dimension."""
    lo_a, hi_a = np.asarray(a[0], float), np.asarray(a[1], float)
    lo_b, hi_b = np.asarray(b[0], float), np.asarray(b[1], float)
    if lo_a.shape != lo_b.shape:
        return 0.0
    inter = float(np.prod(np.clip(np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b), 0.0, None)))
    vol_a = float(np.prod(np.clip(hi_a - lo_a, 0.0, None)))
    vol_b = float(np.prod(np.clip(hi_b - lo_b, 0.0, None)))
    union = vol_a + vol_b - inter
    if union <= 0:
        return 1.0 if np.array_equal(lo_a, lo_b) and np.array_equal(hi_a, hi_b) else 0.0
    return inter / union


def reward_iou_track(pred, gt) -> float:
    """Mean per-frame IoU over the ground-truth frames; a missing frame scores 0."""
    if not gt:
        raise ValueError("ground-truth track is empty")
    by_frame = {}
    for frame, box in pred or ():
        by_frame.setdefault(frame, box)
    total = 0.0
    for frame, box in gt:
        if frame in by_frame:
            total += box_iou(by_frame[frame], box)
    return total / len(gt)


def reward_length(resp: ParsedResponse, r_ans: float, cfg: RewardConfig) -> float:
    lo, hi = cfg.length_window
    if r_ans > cfg.answer_gate and lo <= resp.token_length <= hi:
        return cfg.omega
    return 0.0


def align_graphs(pred: Optional[Sequence[SceneGraph]], gt: Sequence[SceneGraph]) -> list[Optional[SceneGraph]]:
    """Pair each ground-truth frame with a predicted graph.

    Predictions declaring a frame go to that frame; undeclared ones fill the
    remaining ground-truth frames in order.
    """
    if not pred:
        return [None] * len(gt)
    framed = {}
    for g in pred:
        if g.frame is not None:
            framed.setdefault(g.frame, g)
    loose = [g for g in pred if g.frame is None]
    out = []
    for g in gt:
        if g.frame is not None and g.frame in framed:
            out.append(framed[g.frame])
        elif loose:
            out.append(loose.pop(0))
        else:
            out.append(None)
    return out


def _uniform_subset(gt: Sequence[SceneGraph], k: int) -> list[SceneGraph]:
    if len(gt) <= k:
        return list(gt)
    idx = np.round(np.linspace(0, len(gt) - 1, k)).astype(int)
    return [gt[i] for i in idx]


def reward_graph(pred: Optional[Sequence[SceneGraph]], gt: Optional[Sequence[SceneGraph]],
                 cfg: RewardConfig) -> float:
    """Mean frame score over at most ``cfg.graph_frames`` uniformly spaced ground-truth frames."""
    if not gt or not pred:
        return 0.0
    # a lone block without a frame tag is read as a k = 1 prediction
    k = 1 if len(pred) == 1 and pred[0].frame is None else cfg.graph_frames
    gt = _uniform_subset(gt, k)
    scores = [0.0 if p is None else frame_score(p, g, cfg.lam_n, cfg.lam_d)
              for p, g in zip(align_graphs(pred, gt), gt)]
    return float(sum(scores) / len(scores))


def answer_reward(resp: ParsedResponse, qa: QAPair, cfg: RewardConfig) -> float:
    pred = resp.parsed_answer
    if pred is None:
        return 0.0
    kind = qa.answer_type
    if kind == "multi_choice":
        return reward_multichoice(pred, qa.gt_letter)
    if kind == "numerical":
        return reward_numerical(pred, qa.gt_number)
    if kind == "point":
        try:
            return reward_point(pred, qa.gt_point, cfg.lam_n)
        except DimensionError:
            return 0.0
    if kind == "iou_track":
        return reward_iou_track(pred, qa.gt_track)
    raise ValueError(f"unknown answer type {kind!r}")


def reward_total(resp: Union[str, ParsedResponse], qa: QAPair,
                 gt_graphs: Optional[Sequence[SceneGraph]] = None,
                 cfg: Optional[RewardConfig] = None) -> RewardBreakdown:
    """Score one response against one QA pair.

    ``gt_graphs`` defaults to the ground-truth graphs stored on ``qa``.
    """
    cfg = cfg or RewardConfig()
    if gt_graphs is None:
        gt_graphs = qa.gt_graphs
    raw = resp if isinstance(resp, str) else resp.raw
    parsed = parse_response(raw, qa.answer_type)
    r_format = reward_format(parsed)
    r_ans = answer_reward(parsed, qa, cfg)
    r_graph = reward_graph(parsed.pred_graphs, gt_graphs, cfg)
    r_length = reward_length(parsed, r_ans, cfg)
    return RewardBreakdown(
        r_format=r_format,
        r_ans=r_ans,
        r_graph=r_graph,
        r_length=r_length,
        r_total=r_format + r_ans + r_graph + r_length,
        ans_kind=ANS_KIND[qa.answer_type],
        answer_error=parsed.answer_error,
    )
