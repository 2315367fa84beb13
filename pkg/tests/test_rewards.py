import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from st_rlvr.errors import ConfigError, DimensionError
from st_rlvr.qa_gen import QAPair
from st_rlvr.response import parse_format, parse_response, render_response
from st_rlvr.rewards import (
    RewardConfig,
    align_graphs,
    box_iou,
    reward_format,
    reward_graph,
    reward_iou_track,
    reward_length,
    reward_multichoice,
    reward_numerical,
    reward_point,
    reward_total,
)
from st_rlvr.scene_graph import Node, SceneGraph, frame_score, match_graphs, node_reward

CFG = RewardConfig()


def mc_qa(gt_choice=1):
    return QAPair("q-mc", "s", "relative_direction", "Where?", "multi_choice",
                  options=("left", "right", "up", "down"), gt_choice=gt_choice)


def num_qa(gt=10.0):
    return QAPair("q-num", "s", "relative_distance", "How far?", "numerical", gt_number=gt, unit="meters")


def words(n):
    return " ".join(["w"] * n)


def single(loc, frame=None):
    return SceneGraph((Node("a", "car", tuple(loc)),), frame=frame)


# -- simple components -----------------------------------------------------------


def test_format_reward():
    assert reward_format(parse_format("<think>x</think><answer>A</answer>")) == 1.0
    assert reward_format(parse_format("<answer>A</answer>")) == 0.0
    assert reward_format(parse_format("<answer>A</answer><think>x</think>")) == 0.0


def test_multichoice_exhaustive_table():
    for pred, gt in itertools.product("ABCD", repeat=2):
        assert reward_multichoice(pred, gt) == (1.0 if pred == gt else 0.0)
    assert reward_multichoice(None, "A") == 0.0


def test_numerical_examples():
    assert reward_numerical(9, 10) == 0.9
    assert reward_numerical(10, 10) == 1.0
    assert reward_numerical(25, 10) == 0.0
    assert reward_numerical(float("nan"), 10) == 0.0
    assert reward_numerical(float("inf"), 10) == 0.0
    with pytest.raises(AssertionError):
        reward_numerical(1.0, 0.0)


@settings(max_examples=300)
@given(st.floats(0, 1e6), st.floats(1e-3, 1e6), st.floats(1e-3, 1e3))
def test_numerical_scale_invariant(pred, gt, c):
    assert reward_numerical(c * pred, c * gt) == pytest.approx(reward_numerical(pred, gt), abs=1e-9)
    assert 0.0 <= reward_numerical(pred, gt) <= 1.0


def test_point_reward():
    assert reward_point((0.2, 0.3), (0.2, 0.3)) == 1.0
    assert reward_point((1, 0), (0, 0)) == pytest.approx(math.exp(-1))
    with pytest.raises(DimensionError):
        reward_point((1, 0), (0, 0, 0))


@settings(max_examples=100)
@given(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), st.tuples(st.floats(-3, 3), st.floats(-3, 3)))
def test_point_reward_equals_single_node_graph(p, g):
    pred, gt = single(p), single(g)
    assert reward_point(p, g) == pytest.approx(node_reward(pred, gt, match_graphs(pred, gt)), abs=1e-15)
    assert reward_point(p, g) == pytest.approx(frame_score(pred, gt), abs=1e-15)


# -- IoU -------------------------------------------------------------------------


def grid_iou(a, b, res=4):
    """Count grid cells of side 1/res covered by each box."""
    def cells(box):
        (x0, y0), (x1, y1) = box
        return {(i, j) for i in range(int(x0 * res), int(x1 * res)) for j in range(int(y0 * res), int(y1 * res))}
    ca, cb = cells(a), cells(b)
    return Fraction(len(ca & cb), len(ca | cb))


def test_iou_fixture_one_third():
    a, b = [[0, 0], [2, 2]], [[1, 0], [3, 2]]
    assert grid_iou(a, b) == Fraction(1, 3)
    assert abs(box_iou(a, b) - 1 / 3) < 1e-12
    assert abs(reward_iou_track([(0, a)], [(0, b)]) - 1 / 3) < 1e-12


def test_iou_against_grid_random():
    rng = np.random.default_rng(2)
    for _ in range(200):
        def box():
            x0, y0 = rng.integers(0, 8, 2)
            w, h = rng.integers(1, 5, 2)
            return [[int(x0), int(y0)], [int(x0 + w), int(y0 + h)]]
        a, b = box(), box()
        assert box_iou(a, b) == pytest.approx(float(grid_iou(a, b, res=1)), abs=1e-12)


def test_iou_track_examples():
    gt = [(0, ((0, 0), (1, 1))), (1, ((1, 1), (2, 2)))]
    assert reward_iou_track(gt, gt) == 1.0
    disjoint = [(0, ((5, 5), (6, 6))), (1, ((5, 5), (6, 6)))]
    assert reward_iou_track(disjoint, gt) == 0.0
    assert reward_iou_track(gt[:1], gt) == 0.5  # missing frame scores 0
    assert reward_iou_track(None, gt) == 0.0


def test_iou_3d():
    assert box_iou([[0, 0, 0], [2, 2, 2]], [[1, 0, 0], [3, 2, 2]]) == pytest.approx(1 / 3)


box_st = st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 5), st.floats(0, 5)).map(
    lambda t: [[t[0], t[1]], [t[0] + t[2], t[1] + t[3]]])


@settings(max_examples=300)
@given(box_st, box_st)
def test_iou_symmetric_and_bounded(a, b):
    assert box_iou(a, b) == box_iou(b, a)
    assert 0.0 <= box_iou(a, b) <= 1.0


# -- length ----------------------------------------------------------------------


def test_length_reward():
    at = lambda n: parse_format(words(n))  # noqa: E731
    assert reward_length(at(400), 1.0, CFG) == 0.2
    assert reward_length(at(100), 1.0, CFG) == 0.0
    assert reward_length(at(400), 0.5, CFG) == 0.0
    assert reward_length(at(320), 0.81, CFG) == 0.2
    assert reward_length(at(512), 1.0, CFG) == 0.2
    assert reward_length(at(513), 1.0, CFG) == 0.0
    assert reward_length(at(400), 0.8, CFG) == 0.0


# -- graph alignment -------------------------------------------------------------


def test_align_by_frame_then_order():
    gt = [single((0, 0), 0), single((0, 0), 5), single((0, 0), 9)]
    p5, loose = single((1, 1), 5), single((2, 2))
    assert align_graphs([loose, p5], gt) == [loose, p5, None]
    assert align_graphs(None, gt) == [None, None, None]


def test_reward_graph_missing_is_zero():
    gt = [single((0, 0), 0)]
    assert reward_graph(None, gt, CFG) == 0.0
    assert reward_graph([single((0, 0), 0)], gt, CFG) == 1.0


def test_reward_graph_uses_k_frames():
    gt = [single((0, 0), f) for f in range(10)]
    pred = [single((0, 0), f) for f in (0, 3, 6, 9)]
    assert reward_graph(pred, gt, RewardConfig(graph_frames=4)) == 1.0
    assert reward_graph(pred, gt, RewardConfig(graph_frames=10)) == pytest.approx(0.4)


# -- totals ----------------------------------------------------------------------


def test_total_perfect():
    gt_graphs = (SceneGraph((Node("a", "car", (0.1, 0.2)), Node("b", "dog", (0.5, 0.9))), frame=0),)
    raw = render_response("B", think=words(380), graphs=list(gt_graphs))
    assert 320 <= parse_format(raw).token_length <= 512
    b = reward_total(raw, mc_qa(1), gt_graphs, CFG)
    assert (b.r_format, b.r_ans, b.r_graph, b.r_length) == (1.0, 1.0, 1.0, 0.2)
    assert b.r_total == pytest.approx(3.2, abs=1e-15)
    assert b.ans_kind == "mc"


def test_total_all_wrong():
    b = reward_total("<answer>A</answer>", mc_qa(1), None, CFG)
    assert b.r_total == 0.0


def test_total_mixed_components():
    gt = (single((0.0, 0.0), 0),)
    pred = single((math.log(2), 0.0), 0)  # exp(-ln 2) = 0.5
    raw = render_response("9", think=words(40), graphs=[pred])
    resp = parse_response(raw, "numerical")
    assert resp.token_length < 320
    b = reward_total(raw, num_qa(10.0), gt, CFG)
    parts = (reward_format(resp), reward_numerical(9.0, 10.0), reward_graph(resp.pred_graphs, gt, CFG), 0.0)
    assert parts == pytest.approx((1.0, 0.9, 0.5, 0.0), abs=1e-15)
    assert (b.r_format, b.r_ans, b.r_graph, b.r_length) == pytest.approx(parts, abs=1e-15)
    assert b.r_total == pytest.approx(2.4, abs=1e-12)


def test_total_uses_qa_graphs_by_default():
    from dataclasses import replace
    gt = (single((0.3, 0.3), 0),)
    qa = replace(mc_qa(0), gt_graphs=gt)
    raw = render_response("A", graphs=[single((0.3, 0.3), 0)])
    assert reward_total(raw, qa).r_graph == 1.0


def test_extraction_error_scores_zero():
    b = reward_total("<think>x</think><answer>B and C</answer>", mc_qa(1))
    assert b.r_ans == 0.0 and b.answer_error and b.r_total == 1.0


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200), st.integers(0, 1), st.sampled_from(["A", "B", "9", "10", "B and C", ""]),
       st.integers(0, 600))
def test_decomposition_range_and_gate(noise, wrap, ans, n):
    raw = (f"<think>{noise} {words(n)}</think><answer>{ans}</answer>" if wrap else noise + ans)
    cfg = RewardConfig(length_window=(0, 700))
    for qa in (mc_qa(1), num_qa(10.0)):
        b = reward_total(raw, qa, None, cfg)
        assert b.r_total == b.r_format + b.r_ans + b.r_graph + b.r_length
        assert b.r_format in (0.0, 1.0) and 0.0 <= b.r_ans <= 1.0 and 0.0 <= b.r_graph <= 1.0
        assert b.r_length in (0.0, cfg.omega)
        if b.r_length > 0:
            assert b.r_ans > 0.8
            assert cfg.length_window[0] <= len(raw.split()) <= cfg.length_window[1]
        assert 0.0 <= b.r_total <= 3.0 + cfg.omega


def test_config_validation():
    with pytest.raises(ConfigError):
        RewardConfig(omega=-1)
    with pytest.raises(ConfigError):
        RewardConfig(length_window=(512, 320))
    with pytest.raises(ConfigError):
        RewardConfig(graph_frames=0)


def test_single_untagged_block_is_k_one():
    gt = [single((0, 0), f) for f in range(4)]
    assert reward_graph([single((0, 0))], gt, CFG) == 1.0
    assert reward_graph([single((0, 0)), single((0, 0))], gt, CFG) == 0.5
