"""Scene annotation data model and the unified scene-file adapter.

A scene file is JSON of the form::

    {
      "scene_id": "kitchen-01",
      "modality": "video",            # "image" | "video"
      "space": "metric3d",            # "pixel2d" | "metric3d"
      "frame_count": 40,
      "frame_size": [1280, 720],      # required for pixel2d
      "room_area_m2": 42.5,           # metric3d only, optional
      "tracks": [
        {"object_id": "chair-1", "category": "chair",
         "observations": [
           {"frame": 0, "center": [1.0, 2.0, 0.4],
            "box": [[0.7, 1.7, 0.0], [1.3, 2.3, 0.9]],
            "dims_3d": [0.6, 0.6, 0.9]}
         ]}
      ]
    }

pixel2d centers and boxes are in pixels with the y axis pointing down;
metric3d values are in meters.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

from .errors import (
    DimensionError,
    EmptyTrackError,
    InvariantError,
    ParseError,
    SchemaError,
)

MODALITIES = ("image", "video")
SPACES = ("pixel2d", "metric3d")

Point = tuple[float, ...]
Box = tuple[Point, Point]
# 2D: each pixel coordinate divided by the frame dimension; 3D: meters.
NormalizedPoint = tuple[float, ...]


@dataclass(frozen=True)
class Observation:
    frame: int
    center: Point
    box: Box
    dims_3d: Optional[tuple[float, float, float]] = None


@dataclass(frozen=True)
class ObjectTrack:
    object_id: str
    category: str
    observations: tuple[Observation, ...] = ()

    def __post_init__(self):
        prev = None
        for i, obs in enumerate(self.observations):
            where = f"observations[{i}]"
            if not isinstance(obs.frame, int) or isinstance(obs.frame, bool) or obs.frame < 0:
                raise InvariantError("frame must be a non-negative integer", where + ".frame")
            if prev is not None and obs.frame <= prev:
                raise InvariantError("frame_index not strictly increasing", where + ".frame")
            prev = obs.frame
            lo, hi = obs.box
            if not (len(lo) == len(hi) == len(obs.center)):
                raise InvariantError("center and box dimensionality differ", where)
            if any(a > b for a, b in zip(lo, hi)):
                raise InvariantError("box min-corner exceeds max-corner", where + ".box")
            if any(not (a <= c <= b) for a, c, b in zip(lo, obs.center, hi)):
                raise InvariantError("center lies outside its box", where + ".center")
            if obs.dims_3d is not None and any(d <= 0 for d in obs.dims_3d):
                raise InvariantError("dims_3d must be positive", where + ".dims_3d")

    @property
    def frames(self) -> list[int]:
        return [o.frame for o in self.observations]

    def observation_at(self, frame: int) -> Optional[Observation]:
        for obs in self.observations:
            if obs.frame == frame:
                return obs
        return None


@dataclass(frozen=True)
class SceneAnnotation:
    scene_id: str
    modality: str
    space: str
    frame_count: int
    tracks: tuple[ObjectTrack, ...] = ()
    frame_size: Optional[tuple[int, int]] = None
    room_area_m2: Optional[float] = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise InvariantError(f"modality must be one of {MODALITIES}", "modality")
        if self.space not in SPACES:
            raise InvariantError(f"space must be one of {SPACES}", "space")
        if not isinstance(self.frame_count, int) or self.frame_count < 1:
            raise InvariantError("frame_count must be a positive integer", "frame_count")
        if self.modality == "image" and self.frame_count != 1:
            raise InvariantError("image scenes must have frame_count 1", "frame_count")
        if self.space == "pixel2d":
            if self.frame_size is None:
                raise InvariantError("pixel2d scenes require frame_size", "frame_size")
            if len(self.frame_size) != 2 or any(s <= 0 for s in self.frame_size):
                raise InvariantError("frame_size must be two positive numbers", "frame_size")
        if self.room_area_m2 is not None:
            if self.space != "metric3d":
                raise InvariantError("room_area_m2 only allowed for metric3d scenes", "room_area_m2")
            if not self.room_area_m2 > 0:
                raise InvariantError("room_area_m2 must be positive", "room_area_m2")
        seen = set()
        for t, track in enumerate(self.tracks):
            if track.object_id in seen:
                raise InvariantError(f"duplicate object_id {track.object_id!r}", f"tracks[{t}].object_id")
            seen.add(track.object_id)
            for i, obs in enumerate(track.observations):
                where = f"tracks[{t}].observations[{i}]"
                if len(obs.center) != self.dim:
                    raise InvariantError(f"expected {self.dim}D coordinates", where + ".center")
                if obs.frame >= self.frame_count:
                    raise InvariantError("frame index beyond frame_count", where + ".frame")
                if self.space == "pixel2d":
                    lo, hi = obs.box
                    if min(lo) < 0 or hi[0] > self.frame_size[0] or hi[1] > self.frame_size[1]:
                        raise InvariantError("box outside frame bounds", where + ".box")

    @property
    def dim(self) -> int:
        return 2 if self.space == "pixel2d" else 3

    def track(self, object_id: str) -> ObjectTrack:
        for t in self.tracks:
            if t.object_id == object_id:
                return t
        raise KeyError(object_id)

    def annotated_frames(self) -> list[int]:
        """Sorted frame indices observed by at least one track."""
        return sorted({o.frame for t in self.tracks for o in t.observations})

    def tracks_at(self, frame: int) -> list[tuple[ObjectTrack, Observation]]:
        out = []
        for t in self.tracks:
            obs = t.observation_at(frame)
            if obs is not None:
                out.append((t, obs))
        return out


def normalize_point(p: Sequence[float], scene: SceneAnnotation) -> NormalizedPoint:
    """Map a raw point into the scene's normalized coordinate convention."""
    if len(p) != scene.dim:
        raise DimensionError(f"point has {len(p)} coordinates, scene {scene.scene_id} is {scene.dim}D")
    if scene.space == "metric3d":
        return tuple(float(v) for v in p)
    w, h = scene.frame_size
    return (float(p[0]) / w, float(p[1]) / h)


def normalize_box(box: Box, scene: SceneAnnotation) -> Box:
    lo, hi = box
    return normalize_point(lo, scene), normalize_point(hi, scene)


def first_appearance(track: ObjectTrack) -> int:
    if not track.observations:
        raise EmptyTrackError(f"track {track.object_id!r} has no observations")
    return min(o.frame for o in track.observations)


# -- ingest / serialize -------------------------------------------------------


def _require(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", f"{path}.{key}" if path else key)
    return obj[key]


def _numbers(value: Any, path: str, length: Optional[int] = None) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise SchemaError("expected a non-empty list of numbers", path)
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError("expected a finite number", f"{path}[{i}]")
        out.append(float(v))
    if length is not None and len(out) != length:
        raise SchemaError(f"expected {length} numbers", path)
    return tuple(out)


def _observation(raw: Any, path: str) -> Observation:
    frame = _require(raw, "frame", path)
    if isinstance(frame, bool) or not isinstance(frame, int):
        raise SchemaError("frame must be an integer", path + ".frame")
    center = _numbers(_require(raw, "center", path), path + ".center")
    box_raw = _require(raw, "box", path)
    if not isinstance(box_raw, list) or len(box_raw) != 2:
        raise SchemaError("box must be [min-corner, max-corner]", path + ".box")
    lo = _numbers(box_raw[0], path + ".box[0]", len(center))
    hi = _numbers(box_raw[1], path + ".box[1]", len(center))
    dims = raw.get("dims_3d")
    if dims is not None:
        dims = _numbers(dims, path + ".dims_3d", 3)
    return Observation(frame=frame, center=center, box=(lo, hi), dims_3d=dims)


def scene_from_dict(data: Any) -> SceneAnnotation:
    """Build a validated SceneAnnotation from decoded scene JSON."""
    scene_id = _require(data, "scene_id", "")
    modality = _require(data, "modality", "")
    space = _require(data, "space", "")
    frame_count = _require(data, "frame_count", "")
    tracks_raw = _require(data, "tracks", "")
    if not isinstance(scene_id, str):
        raise SchemaError("scene_id must be a string", "scene_id")
    if isinstance(frame_count, bool) or not isinstance(frame_count, int):
        raise SchemaError("frame_count must be an integer", "frame_count")
    if not isinstance(tracks_raw, list):
        raise SchemaError("tracks must be a list", "tracks")

    frame_size = data.get("frame_size")
    if frame_size is not None:
        frame_size = _numbers(frame_size, "frame_size", 2)
        frame_size = tuple(int(s) if float(s).is_integer() else s for s in frame_size)
    room_area = data.get("room_area_m2")
    if room_area is not None:
        if isinstance(room_area, bool) or not isinstance(room_area, (int, float)):
            raise SchemaError("room_area_m2 must be a number", "room_area_m2")
        room_area = float(room_area)

    tracks = []
    for t, raw in enumerate(tracks_raw):
        path = f"tracks[{t}]"
        object_id = _require(raw, "object_id", path)
        category = _require(raw, "category", path)
        obs_raw = _require(raw, "observations", path)
        if not isinstance(object_id, str) or not isinstance(category, str):
            raise SchemaError("object_id and category must be strings", path)
        if not isinstance(obs_raw, list):
            raise SchemaError("observations must be a list", path + ".observations")
        if not obs_raw:
            raise InvariantError("track has no observations", path + ".observations")
        observations = tuple(_observation(o, f"{path}.observations[{i}]") for i, o in enumerate(obs_raw))
        try:
            tracks.append(ObjectTrack(object_id, category, observations))
        except InvariantError as exc:
            raise InvariantError(exc.message, f"{path}.{exc.path}") from None

    tracks.sort(key=lambda tr: tr.object_id)
    return SceneAnnotation(
        scene_id=scene_id,
        modality=modality,
        space=space,
        frame_count=frame_count,
        tracks=tuple(tracks),
        frame_size=frame_size,
        room_area_m2=room_area,
    )


def ingest_scene(path: str | os.PathLike) -> SceneAnnotation:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON ({exc.msg} at line {exc.lineno})", str(path)) from None
    try:
        return scene_from_dict(data)
    except (SchemaError, InvariantError) as exc:
        raise type(exc)(exc.message, f"{path}:{exc.path}" if exc.path else str(path)) from None


def scene_to_dict(scene: SceneAnnotation) -> dict:
    out: dict[str, Any] = {
        "scene_id": scene.scene_id,
        "modality": scene.modality,
        "space": scene.space,
        "frame_count": scene.frame_count,
    }
    if scene.frame_size is not None:
        out["frame_size"] = list(scene.frame_size)
    if scene.room_area_m2 is not None:
        out["room_area_m2"] = scene.room_area_m2
    tracks = []
    for t in scene.tracks:
        obs = []
        for o in t.observations:
            item: dict[str, Any] = {"frame": o.frame, "center": list(o.center),
                                    "box": [list(o.box[0]), list(o.box[1])]}
            if o.dims_3d is not None:
                item["dims_3d"] = list(o.dims_3d)
            obs.append(item)
        tracks.append({"object_id": t.object_id, "category": t.category, "observations": obs})
    out["tracks"] = tracks
    return out


def write_scene(scene: SceneAnnotation, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n", encoding="utf-8")


def load_scene_dir(directory: str | os.PathLike) -> list[SceneAnnotation]:
    """Ingest every ``*.json`` scene in a directory, sorted by file name."""
    return [ingest_scene(p) for p in sorted(Path(directory).glob("*.json"))]
