"""Independent ground-truth recomputation straight from raw scene JSON.

Deliberately shares no code with the package: it reads the scene files with
``json`` and recomputes every answer by brute force.
"""

import json
import math
from collections import Counter
from pathlib import Path

COMPASS = {  # label -> center angle in degrees, y pointing up
    "right": 0, "right-up": 45, "up": 90, "left-up": 135,
    "left": 180, "left-down": -135, "down": -90, "right-down": -45,
}


def load_raw(scene_dir):
    return {d["scene_id"]: d for d in (json.loads(p.read_text()) for p in sorted(Path(scene_dir).glob("*.json")))}


def _track(scene, oid):
    return next(t for t in scene["tracks"] if t["object_id"] == oid)


def _obs(scene, oid, frame):
    return next(o for o in _track(scene, oid)["observations"] if o["frame"] == frame)


def _label(scene, oid):
    cat = _track(scene, oid)["category"]
    n = sum(1 for t in scene["tracks"] if t["category"] == cat)
    return cat if n == 1 else f"{cat} ({oid})"


def _dist(scene, a, b):
    if scene["space"] == "metric3d":
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    w, h = scene["frame_size"]
    dx, dy = a[0] - b[0], a[1] - b[1]
    # fraction of the frame diagonal of the unit square
    return math.sqrt((dx / w) ** 2 + (dy / h) ** 2) / math.sqrt(2)


def _compass(scene, a, b):
    dx = b[0] - a[0]
    dy = -(b[1] - a[1]) if scene["space"] == "pixel2d" else b[1] - a[1]
    ang = math.degrees(math.atan2(dy, dx))

    def gap(label):
        d = abs(ang - COMPASS[label]) % 360
        return min(d, 360 - d)

    return min(COMPASS, key=gap)


def _close(a, b):
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def check(qa, raw):
    """Return None when the QA's ground truth agrees with the oracle, else a reason."""
    scene = raw[qa["scene_id"]]
    task, params, ids = qa["task"], qa["params"], qa["object_ids"]
    if qa["answer_type"] == "multi_choice":
        opts = qa["options"]
        if len(opts) != 4 or len(set(opts)) != 4:
            return "options not 4 distinct"
        chosen = opts[qa["gt_choice"]]
    if task == "counting":
        want = sum(1 for t in scene["tracks"] if t["category"] == params["category"] and t["observations"])
        return None if qa["gt_number"] == want else f"count {qa['gt_number']} != {want}"
    if task == "relative_direction":
        a = _obs(scene, ids[0], params["frame"])["center"]
        b = _obs(scene, ids[1], params["frame"])["center"]
        want = _compass(scene, a, b)
        return None if chosen == want else f"direction {chosen} != {want}"
    if task == "relative_distance":
        a = _obs(scene, ids[0], params["frame"])["center"]
        b = _obs(scene, ids[1], params["frame"])["center"]
        want = _dist(scene, a, b)
        return None if _close(qa["gt_number"], want) and want > 0 else f"distance {qa['gt_number']} != {want}"
    if task == "appearance_order":
        firsts = {oid: min(o["frame"] for o in _track(scene, oid)["observations"]) for oid in ids}
        if len(set(firsts.values())) != len(ids):
            return "tied first appearances co-sampled"
        want = ", ".join(_label(scene, oid) for oid in sorted(ids, key=firsts.get))
        return None if chosen == want else f"order {chosen!r} != {want!r}"
    if task == "object_size":
        dim = params["dimension"]
        if dim == "room_area":
            want = scene["room_area_m2"]
        elif scene["space"] == "metric3d":
            dims = _track(scene, ids[0])["observations"][0]["dims_3d"]
            want = dims[("length", "width", "height").index(dim)]
        else:
            lo, hi = _obs(scene, ids[0], params["frame"])["box"]
            axis = 0 if dim == "width" else 1
            want = (hi[axis] - lo[axis]) / scene["frame_size"][axis]
        return None if _close(qa["gt_number"], want) else f"size {qa['gt_number']} != {want}"
    if task == "motion_tracking":
        want = [[o["frame"], o["box"]] for o in _track(scene, ids[0])["observations"]
                if params["t0"] <= o["frame"] <= params["t1"]]
        got = [[e["frame"], e["box"]] for e in qa["gt_track"]]
        return None if got == want else "track window differs"
    if task == "localization":
        c = _obs(scene, ids[0], params["frame"])["center"]
        want = c if scene["space"] == "metric3d" else [c[0] / scene["frame_size"][0], c[1] / scene["frame_size"][1]]
        ok = all(_close(x, y) for x, y in zip(qa["gt_point"], want)) and len(want) == len(qa["gt_point"])
        return None if ok else f"point {qa['gt_point']} != {want}"
    if task == "displacement":
        obs = [o for o in _track(scene, ids[0])["observations"] if params["t0"] <= o["frame"] <= params["t1"]]
        want = 0.0
        for k in range(len(obs) - 1):
            want += _dist(scene, obs[k]["center"], obs[k + 1]["center"])
        return None if _close(qa["gt_number"], want) and want > 0 else f"path {qa['gt_number']} != {want}"
    return f"unknown task {task}"


def position_histogram(qas):
    counts = Counter(q["gt_choice"] for q in qas if q["answer_type"] == "multi_choice")
    return [counts.get(i, 0) for i in range(4)]
