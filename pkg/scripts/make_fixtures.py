"""Regenerate the committed fixture scenes under fixtures/scenes/.

    python scripts/make_fixtures.py

Output is deterministic; rerunning leaves the files unchanged.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "scenes"


def _r(v, nd=2):
    return [round(float(x), nd) for x in v]


def pixel_track(rng, object_id, category, frames, start, velocity, size, frame_size, wobble=0.0):
    w, h = frame_size
    half = np.asarray(size, float) / 2
    observations = []
    for k, f in enumerate(frames):
        c = np.asarray(start, float) + np.asarray(velocity, float) * k
        c[1] += wobble * math.sin(0.7 * k)
        c = np.clip(c, half + 1, np.array([w, h]) - half - 1)
        c = np.round(c, 1)
        lo = np.round(np.maximum(c - half, 0), 1)
        hi = np.round(np.minimum(c + half, [w, h]), 1)
        observations.append({"frame": int(f), "center": _r(c, 1), "box": [_r(lo, 1), _r(hi, 1)]})
    return {"object_id": object_id, "category": category, "observations": observations}


def metric_track(object_id, category, frames, centers, dims):
    observations = []
    for f, c in zip(frames, centers):
        c = np.round(np.asarray(c, float), 2)
        half = np.asarray(dims, float) / 2
        observations.append({
            "frame": int(f),
            "center": _r(c),
            "box": [_r(c - half, 3), _r(c + half, 3)],
            "dims_3d": _r(dims),
        })
    return {"object_id": object_id, "category": category, "observations": observations}


def street_video_2d():
    rng = np.random.default_rng(7)
    size = (1280, 720)
    specs = [
        ("car-1", "car", 0, (100, 500), (14, -1.0), (180, 110), 0),
        ("car-2", "car", 4, (1150, 560), (-12, 0.5), (200, 120), 0),
        ("car-3", "car", 11, (640, 600), (3, -4.0), (170, 100), 0),
        ("person-1", "person", 2, (300, 420), (5, 0.8), (50, 140), 6),
        ("person-2", "person", 7, (900, 380), (-4, 1.5), (46, 130), 5),
        ("person-3", "person", 15, (520, 300), (2, 3.0), (40, 120), 4),
        ("bicycle-1", "bicycle", 9, (200, 640), (9, -2.0), (90, 80), 3),
        ("dog-1", "dog", 19, (700, 460), (-6, -1.0), (60, 45), 8),
        ("truck-1", "truck", 24, (1000, 250), (-10, 1.2), (260, 170), 0),
        ("traffic_light-1", "traffic_light", 1, (820, 120), (0, 0), (30, 80), 0),
        ("bus-1", "bus", 30, (150, 220), (12, 0.3), (300, 160), 0),
        ("motorcycle-1", "motorcycle", 36, (1200, 420), (-15, 0.0), (80, 70), 2),
    ]
    tracks = []
    for oid, cat, first, start, vel, box, wob in specs:
        length = int(rng.integers(12, 60 - first + 1)) if first < 48 else 60 - first
        frames = list(range(first, min(60, first + length)))
        tracks.append(pixel_track(rng, oid, cat, frames, start, vel, box, size, wob))
    return {"scene_id": "street-video-2d", "modality": "video", "space": "pixel2d",
            "frame_count": 60, "frame_size": list(size), "tracks": tracks}


def highway_image_2d():
    rng = np.random.default_rng(11)
    size = (1242, 375)
    cats = ["car", "car", "car", "car", "van", "truck", "pedestrian", "pedestrian", "cyclist", "tram"]
    tracks = []
    for i, cat in enumerate(cats):
        w = float(rng.uniform(40, 160))
        h = float(rng.uniform(30, 110))
        cx = float(rng.uniform(w / 2 + 2, size[0] - w / 2 - 2))
        cy = float(rng.uniform(h / 2 + 2, size[1] - h / 2 - 2))
        tracks.append(pixel_track(rng, f"{cat}-{i}", cat, [0], (cx, cy), (0, 0), (w, h), size))
    return {"scene_id": "highway-image-2d", "modality": "image", "space": "pixel2d",
            "frame_count": 1, "frame_size": list(size), "tracks": tracks}


def kitchen_video_3d():
    rng = np.random.default_rng(3)
    n_frames = 30
    static = [
        ("chair-1", "chair", (0.6, 0.6, 0.9), 0),
        ("chair-2", "chair", (0.6, 0.55, 0.95), 3),
        ("chair-3", "chair", (0.55, 0.6, 0.9), 6),
        ("table-1", "table", (1.6, 0.9, 0.75), 1),
        ("fridge-1", "refrigerator", (0.8, 0.7, 1.8), 9),
        ("sink-1", "sink", (0.6, 0.5, 0.3), 12),
        ("oven-1", "oven", (0.7, 0.65, 0.9), 15),
        ("cabinet-1", "cabinet", (1.2, 0.45, 2.0), 18),
        ("plant-1", "plant", (0.4, 0.4, 1.1), 21),
    ]
    tracks = []
    for oid, cat, dims, first in static:
        c = (float(rng.uniform(0.5, 6.0)), float(rng.uniform(0.5, 6.5)), dims[2] / 2)
        frames = list(range(first, n_frames))
        tracks.append(metric_track(oid, cat, frames, [c] * len(frames), dims))
    frames = list(range(4, n_frames))
    path = [(1.0 + 0.15 * k, 2.0 + 0.1 * k * (1 if k % 6 < 3 else -1) + 0.05 * k, 0.85) for k in range(len(frames))]
    tracks.append(metric_track("person-1", "person", frames, path, (0.5, 0.4, 1.7)))
    frames = list(range(10, 26))
    path = [(5.0 - 0.2 * k, 5.5 - 0.1 * k, 0.2) for k in range(len(frames))]
    tracks.append(metric_track("robot-1", "robot_vacuum", frames, path, (0.35, 0.35, 0.1)))
    return {"scene_id": "kitchen-video-3d", "modality": "video", "space": "metric3d",
            "frame_count": n_frames, "room_area_m2": 42.5, "tracks": tracks}


def office_image_3d():
    rng = np.random.default_rng(5)
    objs = [
        ("desk-1", "desk", (1.4, 0.7, 0.75)),
        ("desk-2", "desk", (1.2, 0.6, 0.74)),
        ("chair-1", "chair", (0.55, 0.55, 1.0)),
        ("chair-2", "chair", (0.5, 0.5, 0.95)),
        ("monitor-1", "monitor", (0.6, 0.2, 0.45)),
        ("bookshelf-1", "bookshelf", (0.9, 0.35, 1.9)),
        ("lamp-1", "lamp", (0.3, 0.3, 1.5)),
        ("sofa-1", "sofa", (2.0, 0.9, 0.8)),
        ("trash_can-1", "trash_can", (0.3, 0.3, 0.45)),
    ]
    tracks = []
    for oid, cat, dims in objs:
        c = (float(rng.uniform(0.4, 4.5)), float(rng.uniform(0.4, 3.8)), dims[2] / 2)
        tracks.append(metric_track(oid, cat, [0], [c], dims))
    return {"scene_id": "office-image-3d", "modality": "image", "space": "metric3d",
            "frame_count": 1, "room_area_m2": 18.0, "tracks": tracks}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, build in [("street_video_2d", street_video_2d), ("highway_image_2d", highway_image_2d),
                        ("kitchen_video_3d", kitchen_video_3d), ("office_image_3d", office_image_3d)]:
        (OUT / f"{name}.json").write_text(json.dumps(build(), indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
