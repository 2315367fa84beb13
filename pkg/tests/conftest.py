from pathlib import Path

import pytest

from st_rlvr.annotations import Observation, ObjectTrack, SceneAnnotation, load_scene_dir

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "scenes"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def fixture_scenes():
    return load_scene_dir(FIXTURE_DIR)


def point_obs(frame, center, half=0.05):
    lo = tuple(c - half for c in center)
    hi = tuple(c + half for c in center)
    return Observation(frame, tuple(center), (lo, hi))


def make_track(object_id, category, frames_centers, half=1.0, dims=None):
    obs = []
    for f, c in frames_centers:
        lo = tuple(v - half for v in c)
        hi = tuple(v + half for v in c)
        obs.append(Observation(f, tuple(float(v) for v in c), (lo, hi), dims))
    return ObjectTrack(object_id, category, tuple(obs))


def metric_scene(tracks, frame_count=1, modality=None, room_area=None, scene_id="s3d"):
    modality = modality or ("image" if frame_count == 1 else "video")
    return SceneAnnotation(scene_id, modality, "metric3d", frame_count, tuple(tracks), room_area_m2=room_area)


def pixel_scene(tracks, frame_count=1, size=(1280, 720), scene_id="s2d"):
    modality = "image" if frame_count == 1 else "video"
    return SceneAnnotation(scene_id, modality, "pixel2d", frame_count, tuple(tracks), frame_size=size)
