"""Question-answer generation from scene annotations.

Eight task families are produced.  Every generator enumerates candidate
questions deterministically, subsamples them with a generator seeded from
``(cfg.seed, scene_id, task)`` and returns QAPairs; ``build_dataset`` then
deduplicates, applies quotas, balances multi-choice answer positions and
attaches the ground-truth graphs used by the graph reward.

Conventions:

* pixel2d directions are judged in pixel space with the y axis pointing
  down, so "up" means towards the top of the frame; metric3d directions use
  the x-y ground plane with +y as "up".
* pixel2d distances and path lengths are expressed in fractions of the
  normalized frame diagonal: ``hypot(dx / W, dy / H) / sqrt(2)``.
* motion-tracking boxes are stored in raw scene units (pixels or meters).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .annotations import (
    ObjectTrack,
    SceneAnnotation,
    first_appearance,
    normalize_box,
    normalize_point,
)
from .errors import ConfigError, QuotaUnsatisfiableError
from .scene_graph import SceneGraph, graph_from_wire, ground_truth_graphs
from .templates import DIRECTION_LABELS, POOLS, UNIT_TEXT

TASKS = (
    "counting",
    "relative_direction",
    "relative_distance",
    "appearance_order",
    "object_size",
    "motion_tracking",
    "localization",
    "displacement",
)
ANSWER_TYPE = {
    "counting": "numerical",
    "relative_direction": "multi_choice",
    "relative_distance": "numerical",
    "appearance_order": "multi_choice",
    "object_size": "numerical",
    "motion_tracking": "iou_track",
    "localization": "point",
    "displacement": "numerical",
}
LETTERS = "ABCD"


@dataclass(frozen=True)
class QAPair:
    qa_id: str
    scene_id: str
    task: str
    question: str
    answer_type: str
    object_ids: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)
    options: Optional[tuple[str, ...]] = None
    gt_choice: Optional[int] = None
    gt_number: Optional[float] = None
    unit: Optional[str] = None
    gt_point: Optional[tuple[float, ...]] = None
    gt_track: Optional[tuple] = None
    provenance: dict = field(default_factory=dict)
    gt_graphs: Optional[tuple[SceneGraph, ...]] = None

    def __post_init__(self):
        populated = {
            "multi_choice": self.gt_choice is not None,
            "numerical": self.gt_number is not None,
            "point": self.gt_point is not None,
            "iou_track": self.gt_track is not None,
        }
        if self.answer_type not in populated:
            raise ValueError(f"unknown answer_type {self.answer_type!r}")
        if sum(populated.values()) != 1 or not populated[self.answer_type]:
            raise ValueError("exactly one ground-truth field must match answer_type")
        if self.answer_type == "multi_choice":
            if self.options is None or len(self.options) != 4 or len(set(self.options)) != 4:
                raise ValueError("multi-choice QAs need 4 distinct options")
            if not 0 <= self.gt_choice < 4:
                raise ValueError("gt_choice out of range")
        if self.answer_type == "numerical" and not (math.isfinite(self.gt_number) and self.gt_number > 0):
            raise ValueError("numerical ground truth must be finite and positive")

    @property
    def gt_letter(self) -> Optional[str]:
        return None if self.gt_choice is None else LETTERS[self.gt_choice]

    def prompt(self) -> str:
        """Question text as shown to a model, with lettered options when present."""
        if not self.options:
            return self.question
        opts = "\n".join(f"{LETTERS[i]}. {o}" for i, o in enumerate(self.options))
        return f"{self.question}\n{opts}"

    def dedup_key(self) -> tuple:
        return (self.scene_id, self.task, self.object_ids,
                json.dumps(self.params, sort_keys=True))

    def to_dict(self) -> dict:
        d = {
            "qa_id": self.qa_id,
            "scene_id": self.scene_id,
            "task": self.task,
            "question": self.question,
            "answer_type": self.answer_type,
            "object_ids": list(self.object_ids),
            "params": self.params,
        }
        if self.options is not None:
            d["options"] = list(self.options)
            d["gt_choice"] = self.gt_choice
        if self.gt_number is not None:
            d["gt_number"] = self.gt_number
            d["unit"] = self.unit
        if self.gt_point is not None:
            d["gt_point"] = list(self.gt_point)
        if self.gt_track is not None:
            d["gt_track"] = [{"frame": f, "box": [list(b[0]), list(b[1])]} for f, b in self.gt_track]
        d["provenance"] = self.provenance
        if self.gt_graphs is not None:
            d["gt_graphs"] = [g.to_wire() for g in self.gt_graphs]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QAPair":
        track = d.get("gt_track")
        if track is not None:
            track = tuple((int(e["frame"]), (tuple(e["box"][0]), tuple(e["box"][1]))) for e in track)
        graphs = d.get("gt_graphs")
        if graphs is not None:
            graphs = tuple(graph_from_wire(g) for g in graphs)
        return cls(
            qa_id=d["qa_id"],
            scene_id=d["scene_id"],
            task=d["task"],
            question=d["question"],
            answer_type=d["answer_type"],
            object_ids=tuple(d.get("object_ids", ())),
            params=d.get("params", {}),
            options=tuple(d["options"]) if d.get("options") is not None else None,
            gt_choice=d.get("gt_choice"),
            gt_number=d.get("gt_number"),
            unit=d.get("unit"),
            gt_point=tuple(d["gt_point"]) if d.get("gt_point") is not None else None,
            gt_track=track,
            provenance=d.get("provenance", {}),
            gt_graphs=graphs,
        )


@dataclass
class GenerationConfig:
    seed: int = 0
    quotas: dict = field(default_factory=dict)  # task -> int; missing or None = keep all
    direction_scheme: str = "compass8"
    min_pair_separation: float = 0.02
    paraphrase_pool_size: int = 3
    max_per_scene: int = 120
    graph_frames: int = 4

    def __post_init__(self):
        for task, q in self.quotas.items():
            if task not in TASKS:
                raise ConfigError(f"quotas: unknown task {task!r}")
            if q is not None and (not isinstance(q, int) or q < 0):
                raise ConfigError(f"quotas.{task}: must be a non-negative integer")
        if self.direction_scheme != "compass8":
            raise ConfigError("direction_scheme: only 'compass8' is supported")
        if self.min_pair_separation < 0:
            raise ConfigError("min_pair_separation: must be >= 0")
        if self.paraphrase_pool_size < 1:
            raise ConfigError("paraphrase_pool_size: must be >= 1")
        if self.max_per_scene < 1:
            raise ConfigError("max_per_scene: must be >= 1")
        if self.graph_frames < 1:
            raise ConfigError("graph_frames: must be >= 1")


# -- helpers -------------------------------------------------------------------


def scene_rng(cfg: GenerationConfig, scene_id: str, task: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, zlib.crc32(scene_id.encode()), TASKS.index(task)])


def _labels(scene: SceneAnnotation) -> dict[str, str]:
    """Human-readable object references; the id is added when a category repeats."""
    counts = Counter(t.category for t in scene.tracks)
    return {t.object_id: t.category if counts[t.category] == 1 else f"{t.category} ({t.object_id})"
            for t in scene.tracks}


def _phrase(key: str, cfg: GenerationConfig, rng: np.random.Generator, **kw) -> tuple[str, str]:
    pool = POOLS[key][: max(1, min(cfg.paraphrase_pool_size, len(POOLS[key])))]
    idx = int(rng.integers(len(pool)))
    return pool[idx].format(**kw), f"{key}.{idx}"


def _when(scene: SceneAnnotation, frame: int) -> str:
    return "In the image" if scene.modality == "image" else f"At frame {frame}"


def _medium(scene: SceneAnnotation) -> str:
    return scene.modality


def _subsample(items: list, cap: int, rng: np.random.Generator) -> list:
    if len(items) <= cap:
        return items
    keep = sorted(rng.choice(len(items), size=cap, replace=False).tolist())
    return [items[i] for i in keep]


def _make(scene: SceneAnnotation, task: str, question: str, template_id: str, cfg: GenerationConfig,
          object_ids: Sequence[str] = (), params: Optional[dict] = None, **gt) -> QAPair:
    params = params or {}
    key = json.dumps([scene.scene_id, task, list(object_ids), params], sort_keys=True)
    digest = hashlib.sha1(key.encode()).hexdigest()[:12]
    return QAPair(
        qa_id=f"{task}-{digest}",
        scene_id=scene.scene_id,
        task=task,
        question=question,
        answer_type=ANSWER_TYPE[task],
        object_ids=tuple(object_ids),
        params=params,
        provenance={"generator": f"gen_{task}", "template_id": template_id, "seed": cfg.seed},
        **gt,
    )


def _with_options(correct: str, distractors: Sequence[str], rng: np.random.Generator) -> dict:
    opts = [correct, *distractors]
    order = rng.permutation(4).tolist()
    options = tuple(opts[i] for i in order)
    return {"options": options, "gt_choice": order.index(0)}


def _separation(scene: SceneAnnotation, a, b) -> float:
    return math.dist(normalize_point(a, scene), normalize_point(b, scene))


def scene_distance(scene: SceneAnnotation, a: Sequence[float], b: Sequence[float]) -> float:
    """Center-to-center distance in the scene's answer unit (meters or frame diagonals)."""
    if scene.space == "metric3d":
        return math.dist(a, b)
    return math.dist(normalize_point(a, scene), normalize_point(b, scene)) / math.sqrt(2.0)


def distance_unit(scene: SceneAnnotation) -> str:
    return "meters" if scene.space == "metric3d" else "frame_diagonal"


def direction_label(scene: SceneAnnotation, a: Sequence[float], b: Sequence[float]) -> str:
    """8-way compass label of ``b`` relative to ``a``."""
    dx = b[0] - a[0]
    dy = (a[1] - b[1]) if scene.space == "pixel2d" else (b[1] - a[1])
    angle = math.degrees(math.atan2(dy, dx))
    sector = int(math.floor((angle + 22.5) / 45.0)) % 8
    return DIRECTION_LABELS[sector]


def path_length(scene: SceneAnnotation, track: ObjectTrack, t0: int, t1: int) -> float:
    obs = [o for o in track.observations if t0 <= o.frame <= t1]
    return sum(scene_distance(scene, p.center, q.center) for p, q in zip(obs, obs[1:]))


def track_window(track: ObjectTrack, t0: int, t1: int) -> tuple:
    return tuple((o.frame, o.box) for o in track.observations if t0 <= o.frame <= t1)


def _co_visible(a: ObjectTrack, b: ObjectTrack) -> list[int]:
    return sorted(set(a.frames) & set(b.frames))


# -- generators ----------------------------------------------------------------


def gen_counting(scene: SceneAnnotation, cfg: GenerationConfig) -> list[QAPair]:
    rng = scene_rng(cfg, scene.scene_id, "counting")
    ids_by_cat: dict[str, set] = defaultdict(set)
    for t in scene.tracks:
        if t.observations:
            ids_by_cat[t.category].add(t.object_id)
    out = []
    for cat in _subsample(sorted(ids_by_cat), cfg.max_per_scene, rng):
        q, tid = _phrase("counting", cfg, rng, cat=cat, medium=_medium(scene))
        out.append(_make(scene, "counting", q, tid, cfg, (), {"category": cat},
                         gt_number=float(len(ids_by_cat[cat])), unit="count"))
    return out


def gen_relative_direction(scene: SceneAnnotation, cfg: GenerationConfig) -> list[QAPair]:
    rng = scene_rng(cfg, scene.scene_id, "relative_direction")
    labels = _labels(scene)
    candidates = []
    for a, b in itertools.permutations(scene.tracks, 2):
        frames = _co_visible(a, b)
        if frames:
            candidates.append((a, b, frames))
    out = []
    for a, b, frames in _subsample(candidates, cfg.max_per_scene, rng):
        frame = frames[int(rng.integers(len(frames)))]
        ca = a.observation_at(frame).center
        cb = b.observation_at(frame).center
        if _separation(scene, ca, cb) < cfg.min_pair_separation or ca == cb:
            continue
        correct = direction_label(scene, ca, cb)
        others = [d for d in DIRECTION_LABELS if d != correct]
        distractors = [others[i] for i in rng.choice(len(others), size=3, replace=False)]
        q, tid = _phrase("relative_direction", cfg, rng, when=_when(scene, frame),
                         a=labels[a.object_id], b=labels[b.object_id])
        out.append(_make(scene, "relative_direction", q, tid, cfg, (a.object_id, b.object_id),
                         {"frame": frame}, **_with_options(correct, distractors, rng)))
    return out


def gen_relative_distance(scene: SceneAnnotation, cfg: GenerationConfig) -> list[QAPair]:
    rng = scene_rng(cfg, scene.scene_id, "relative_distance")
    labels = _labels(scene)
    candidates = []
    for a, b in itertools.combinations(scene.tracks, 2):
        frames = _co_visible(a, b)
        if frames:
            candidates.append((a, b, frames))
    unit = distance_unit(scene)
    out = []
    for a, b, frames in _subsample(candidates, cfg.max_per_scene, rng):
        frame = frames[int(rng.integers(len(frames)))]
        ca = a.observation_at(frame).center
        cb = b.observation_at(frame).center
        if _separation(scene, ca, cb) < cfg.min_pair_separation:
            continue
        dist = scene_distance(scene, ca, cb)
        if not dist > 0:
            continue
        q, tid = _phrase("relative_distance", cfg, rng, when=_when(scene, frame),
                         a=labels[a.object_id], b=labels[b.object_id], unit=UNIT_TEXT[unit])
        out.append(_make(scene, "relative_distance", q, tid, cfg, (a.object_id, b.object_id),
                         {"frame": frame}, gt_number=dist, unit=unit))
    return out


def gen_appearance_order(scene: SceneAnnotation, cfg: GenerationConfig) -> list[QAPair]:
    if scene.modality != "video":
        return []
    rng = scene_rng(cfg, scene.scene_id, "appearance_order")
    labels = _labels(scene)
    firsts = {t.object_id: first_appearance(t) for t in scene.tracks if t.observations}
    ids = sorted(firsts)
    candidates = []
    for size in (3, 4):
        for combo in itertools.combinations(ids, size):
            if len({firsts[i] for i in combo}) == size:
                candidates.append(combo)
    out = []
    for combo in _subsample(candidates, cfg.max_per_scene, rng):
        # presentation order of the objects in the question is shuffled
        shown = [combo[i] for i in rng.permutation(len(combo))]
        ordered = sorted(combo, key=lambda i: firsts[i])
        correct = ", ".join(labels[i] for i in ordered)
        perms = [p for p in itertools.permutations(ordered) if list(p) != ordered]
        picks = rng.choice(len(perms), size=3, replace=False)
        distractors = [", ".join(labels[i] for i in perms[k]) for k in picks]
        q, tid = _phrase("appearance_order", cfg, rng, objects=", ".join(labels[i] for i in shown))
        out.append(_make(scene, "appearance_order", q, tid, cfg, tuple(sorted(combo)), {},
                         **_with_options(correct, distractors, rng)))
    return out


_DIMS = ("length", "width", "height")


def gen_object_size(scene: SceneAnnotation, cfg: GenerationConfig) -> list[QAPair]:
    rng = scene_rng(cfg, scene.scene_id, "object_size")
    labels = _labels(scene)
    candidates = []
    for t in scene.tracks:
        if scene.space == "metric3d":
            dims = next((o.dims_3d for o in t.observations if o.dims_3d is not None), None)
            if dims is not None:
                candidates.extend((t, d, None) for d in range(3))
        elif t.observations:
            candidates.extend((t, d, None) for d in range(2))
    out = []
    for t, d, _ in _subsample(candidates, cfg.max_per_scene, rng):
        if scene.space == "metric3d":
            value = next(o.dims_3d for o in t.observations if o.dims_3d is not None)[d]
            q, tid = _phrase("object_size.dims", cfg, rng, dim=_DIMS[d], a=labels[t.object_id])
            params, unit = {"dimension": _DIMS[d]}, "meters"
        else:
            obs = t.observations[int(rng.integers(len(t.observations)))]
            lo, hi = normalize_box(obs.box, scene)
            value = hi[d] - lo[d]
            dim, axis = ("width", "width") if d == 0 else ("height", "height")
            q, tid = _phrase("object_size.box", cfg, rng, dim=dim, axis=axis,
                             a=labels[t.object_id], frame=obs.frame)
            params, unit = {"dimension": dim, "frame": obs.frame}, "frame_fraction"
        if not (value > 0 and math.isfinite(value)):
            continue
        out.append(_make(scene, "object_size", q, tid, cfg, (t.object_id,), params,
                         gt_number=float(value), unit=unit))
    if scene.room_area_m2 is not None:
        q, tid = _phrase("object_size.room", cfg, rng)
        out.append(_make(scene, "object_size", q, tid, cfg, (), {"dimension": "room_area"},
                         gt_number=float(scene.room_area_m2), unit="square_meters"))
    return out


def gen_motion_tracking(scene: SceneAnnotation, cfg: GenerationConfig, windows_per_track: int = 3,
                        max_window: int = 8) -> list[QAPair]:
    if scene.modality != "video":
        return []
    rng = scene_rng(cfg, scene.scene_id, "motion_tracking")
    labels = _labels(scene)
    candidates = []
    for t in scene.tracks:
        n = len(t.observations)
        if n < 3:
            continue
        seen = set()
        for _ in range(windows_per_track):
            length = int(rng.integers(3, min(max_window, n) + 1))
            start = int(rng.integers(0, n - length + 1))
            window = (t.observations[start].frame, t.observations[start + length - 1].frame)
            if window not in seen:
                seen.add(window)
                candidates.append((t, window))
    out = []
    for t, (t0, t1) in _subsample(candidates, cfg.max_per_scene, rng):
        q, tid = _phrase("motion_tracking", cfg, rng, a=labels[t.object_id], t0=t0, t1=t1)
        out.append(_make(scene, "motion_tracking", q, tid, cfg, (t.object_id,),
                         {"t0": t0, "t1": t1}, gt_track=track_window(t, t0, t1)))
    return out


def gen_localization(scene: SceneAnnotation, cfg: GenerationConfig, frames_per_track: int = 3) -> list[QAPair]:
    rng = scene_rng(cfg, scene.scene_id, "localization")
    labels = _labels(scene)
    candidates = []
    for t in scene.tracks:
        frames = t.frames
        if not frames:
            continue
        k = min(frames_per_track, len(frames))
        for i in sorted(rng.choice(len(frames), size=k, replace=False).tolist()):
            candidates.append((t, frames[i]))
    coords = " (x, y) in frame fractions" if scene.space == "pixel2d" else " (x, y, z) in meters"
    out = []
    for t, frame in _subsample(candidates, cfg.max_per_scene, rng):
        point = normalize_point(t.observation_at(frame).center, scene)
        q, tid = _phrase("localization", cfg, rng, when=_when(scene, frame), a=labels[t.object_id],
                         coords=coords)
        out.append(_make(scene, "localization", q, tid, cfg, (t.object_id,), {"frame": frame},
                         gt_point=point))
    return out


def gen_displacement(scene: SceneAnnotation, cfg: GenerationConfig, spans_per_track: int = 3) -> list[QAPair]:
    if scene.modality != "video":
        return []
    rng = scene_rng(cfg, scene.scene_id, "displacement")
    labels = _labels(scene)
    unit = distance_unit(scene)
    candidates = []
    for t in scene.tracks:
        frames = t.frames
        if len(frames) < 2:
            continue
        seen = set()
        for _ in range(spans_per_track):
            i, j = sorted(rng.choice(len(frames), size=2, replace=False).tolist())
            if (frames[i], frames[j]) not in seen:
                seen.add((frames[i], frames[j]))
                candidates.append((t, frames[i], frames[j]))
    out = []
    for t, t0, t1 in _subsample(candidates, cfg.max_per_scene, rng):
        dist = path_length(scene, t, t0, t1)
        if not dist > 0:
            continue
        q, tid = _phrase("displacement", cfg, rng, a=labels[t.object_id], t0=t0, t1=t1,
                         unit=UNIT_TEXT[unit])
        out.append(_make(scene, "displacement", q, tid, cfg, (t.object_id,), {"t0": t0, "t1": t1},
                         gt_number=dist, unit=unit))
    return out


GENERATORS: dict[str, Callable[[SceneAnnotation, GenerationConfig], list[QAPair]]] = {
    "counting": gen_counting,
    "relative_direction": gen_relative_direction,
    "relative_distance": gen_relative_distance,
    "appearance_order": gen_appearance_order,
    "object_size": gen_object_size,
    "motion_tracking": gen_motion_tracking,
    "localization": gen_localization,
    "displacement": gen_displacement,
}


# -- dataset assembly ----------------------------------------------------------


def balance_positions(qas: list[QAPair], rng: np.random.Generator) -> list[QAPair]:
    """Reassign correct-answer positions so each slot is used within one of n/4 times."""
    n = len(qas)
    slots = np.tile(np.arange(4), n // 4 + 1)[:n]
    slots = rng.permutation(slots)
    out = []
    for qa, slot in zip(qas, slots.tolist()):
        correct = qa.options[qa.gt_choice]
        others = [o for i, o in enumerate(qa.options) if i != qa.gt_choice]
        others = [others[i] for i in rng.permutation(3)]
        options = others[:slot] + [correct] + others[slot:]
        out.append(replace(qa, options=tuple(options), gt_choice=slot))
    return out


def dataset_stats(qas: Sequence[QAPair]) -> dict:
    per_task = Counter(q.task for q in qas)
    positions: dict[str, list[int]] = {}
    for q in qas:
        if q.gt_choice is not None:
            positions.setdefault(q.task, [0, 0, 0, 0])[q.gt_choice] += 1
    overall = [sum(p[i] for p in positions.values()) for i in range(4)]
    return {
        "total": len(qas),
        "per_task": {t: per_task.get(t, 0) for t in TASKS},
        "per_answer_type": dict(sorted(Counter(q.answer_type for q in qas).items())),
        "per_scene": dict(sorted(Counter(q.scene_id for q in qas).items())),
        "answer_positions": {t: dict(zip(LETTERS, p)) for t, p in sorted(positions.items())},
        "answer_positions_overall": dict(zip(LETTERS, overall)),
    }


def build_dataset(scenes: Sequence[SceneAnnotation], cfg: GenerationConfig) -> tuple[list[QAPair], dict]:
    if not scenes:
        raise QuotaUnsatisfiableError("no scenes given")
    by_task: dict[str, list[QAPair]] = {t: [] for t in TASKS}
    seen = set()
    graphs_cache: dict[str, tuple[SceneGraph, ...]] = {}
    for scene in sorted(scenes, key=lambda s: s.scene_id):
        if scene.tracks:
            graphs_cache[scene.scene_id] = tuple(ground_truth_graphs(scene, cfg.graph_frames))
        for task, gen in GENERATORS.items():
            if not scene.tracks:
                continue
            for qa in gen(scene, cfg):
                key = qa.dedup_key()
                if key in seen:
                    continue
                seen.add(key)
                by_task[task].append(qa)

    master = np.random.default_rng([cfg.seed, 0xD5])
    out: list[QAPair] = []
    for task in TASKS:
        items = by_task[task]
        quota = cfg.quotas.get(task)
        if quota is not None:
            if quota > len(items):
                raise QuotaUnsatisfiableError(
                    f"task {task}: quota {quota} but only {len(items)} unique QAs available")
            keep = sorted(master.choice(len(items), size=quota, replace=False).tolist())
            items = [items[i] for i in keep]
        if items and ANSWER_TYPE[task] == "multi_choice":
            items = balance_positions(items, master)
        out.extend(replace(q, gt_graphs=graphs_cache.get(q.scene_id)) for q in items)
    return out, dataset_stats(out)


def dumps_qa(qa: QAPair) -> str:
    return json.dumps(qa.to_dict(), separators=(",", ":"))


def write_dataset(qas: Iterable[QAPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qa in qas:
            fh.write(dumps_qa(qa) + "\n")


def read_dataset(path) -> list[QAPair]:
    with open(path, encoding="utf-8") as fh:
        return [QAPair.from_dict(json.loads(line)) for line in fh if line.strip()]
