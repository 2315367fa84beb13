"""Parsing of free-text model responses.

Tag grammar (ABNF-style, whitespace and other text are allowed around tags)::

    response    = *text think *text answer *text
    think       = "<think>" think-body "</think>"
    answer      = "<answer>" *text "</answer>"
    think-body  = *(text / graph)
    graph       = "<graph" [1*SP "frame=" ["\""] 1*DIGIT ["\""]] ">" json-object "</graph>"
    json-object = {"nodes": [{"id": scalar, "category": string, "loc": [x, y(, z)]}, ...]}

The response is well formatted when each of the four think/answer tags
occurs exactly once and the think block closes before the answer block opens.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from typing import Any, Optional, Union

from .errors import ExtractionError
from .scene_graph import SceneGraph, graph_from_wire

ANSWER_TYPES = ("multi_choice", "numerical", "point", "iou_track")
LETTERS = "ABCD"

TrackBox = tuple[int, tuple[tuple[float, ...], tuple[float, ...]]]
Answer = Union[str, float, tuple, list]


@dataclass(frozen=True)
class ParsedResponse:
    raw: str
    token_length: int
    think: Optional[str] = None
    answer_text: Optional[str] = None
    format_ok: bool = False
    pred_graphs: Optional[tuple[SceneGraph, ...]] = None
    parsed_answer: Optional[Answer] = None
    answer_error: Optional[str] = None


def token_length(text: str) -> int:
    return len(text.split())


def _single_block(raw: str, tag: str) -> Optional[tuple[int, int, str]]:
    """(start, end, inner) of the unique ``<tag>...</tag>`` block, else None."""
    opens = [m.start() for m in re.finditer(f"<{tag}>", raw)]
    closes = [m.start() for m in re.finditer(f"</{tag}>", raw)]
    if len(opens) != 1 or len(closes) != 1 or closes[0] < opens[0]:
        return None
    start = opens[0] + len(tag) + 2
    return opens[0], closes[0] + len(tag) + 3, raw[start:closes[0]]


def parse_format(raw: str) -> ParsedResponse:
    if not isinstance(raw, str):
        raw = str(raw)
    think = _single_block(raw, "think")
    answer = _single_block(raw, "answer")
    ok = think is not None and answer is not None and think[1] <= answer[0]
    return ParsedResponse(
        raw=raw,
        token_length=token_length(raw),
        think=think[2] if think else None,
        answer_text=answer[2] if answer else None,
        format_ok=ok,
    )


_GRAPH_RE = re.compile(r'<graph(?:\s+frame\s*=\s*"?(\d+)"?)?\s*>(.*?)</graph>', re.DOTALL)


def parse_graph_block(think: Optional[str]) -> Optional[list[SceneGraph]]:
    """Extract the predicted graphs from a think block; unparseable blocks are dropped."""
    if not think:
        return None
    graphs = []
    for m in _GRAPH_RE.finditer(think):
        frame = int(m.group(1)) if m.group(1) is not None else None
        try:
            graphs.append(graph_from_wire(json.loads(m.group(2)), frame=frame))
        except (ValueError, RecursionError):
            continue
    return graphs or None


_NUMBER = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_NUMBER_RE = re.compile(_NUMBER)
_POINT_RE = re.compile(
    rf"[\(\[]\s*({_NUMBER})\s*,\s*({_NUMBER})\s*(?:,\s*({_NUMBER})\s*)?[\)\]]")
_BARE_LETTER_RE = re.compile(r"^\W*([A-Da-d])\W*$")
_UPPER_LETTER_RE = re.compile(r"(?<![A-Za-z0-9_])([A-D])(?![A-Za-z0-9_])")
_CUED_LETTER_RE = re.compile(
    r"\b(?:option|answer|choice)\b\s*(?:is\s*)?[:\-]?\s*\(?([a-d])\)?(?![A-Za-z0-9_])", re.IGNORECASE)


def _parse_choice(text: str) -> str:
    bare = _BARE_LETTER_RE.match(text)
    if bare:
        return bare.group(1).upper()
    letters = set(_UPPER_LETTER_RE.findall(text))
    if len(letters) == 1:
        return letters.pop()
    if len(letters) > 1:
        raise ExtractionError(f"ambiguous choice: {sorted(letters)}")
    cued = {c.upper() for c in _CUED_LETTER_RE.findall(text)}
    if len(cued) == 1:
        return cued.pop()
    if len(cued) > 1:
        raise ExtractionError(f"ambiguous choice: {sorted(cued)}")
    raise ExtractionError("no option letter found")


def _parse_number(text: str) -> float:
    for m in _NUMBER_RE.finditer(text):
        value = float(m.group(0))
        if math.isfinite(value):
            return value
    raise ExtractionError("no finite number found")


def _parse_point(text: str) -> tuple[float, ...]:
    m = _POINT_RE.search(text)
    if not m:
        raise ExtractionError("no point tuple found")
    coords = tuple(float(g) for g in m.groups() if g is not None)
    if not all(math.isfinite(c) for c in coords):
        raise ExtractionError("point has non-finite coordinates")
    return coords


def _track_from_json(data: Any) -> list[TrackBox]:
    if not isinstance(data, list) or not data:
        raise ValueError("track must be a non-empty list")
    out = []
    for item in data:
        if not isinstance(item, dict):
            raise ValueError("track entries must be objects")
        frame, box = item.get("frame"), item.get("box")
        if isinstance(frame, bool) or not isinstance(frame, int):
            raise ValueError("frame must be an integer")
        if not isinstance(box, list) or len(box) != 2:
            raise ValueError("box must be [min-corner, max-corner]")
        corners = []
        for corner in box:
            if not isinstance(corner, list) or len(corner) not in (2, 3):
                raise ValueError("box corners must have 2 or 3 coordinates")
            vals = []
            for v in corner:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise ValueError("box coordinates must be finite numbers")
                vals.append(float(v))
            corners.append(tuple(vals))
        if len(corners[0]) != len(corners[1]):
            raise ValueError("box corners differ in dimension")
        out.append((frame, (corners[0], corners[1])))
    return out


def _parse_track(text: str) -> list[TrackBox]:
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\[", text):
        try:
            data, _ = decoder.raw_decode(text, m.start())
            return _track_from_json(data)
        except (ValueError, RecursionError):
            continue
    raise ExtractionError("no JSON track list found")


def parse_answer(answer_text: str, expected: str) -> Answer:
    text = answer_text.strip()
    if expected == "multi_choice":
        return _parse_choice(text)
    if expected == "numerical":
        return _parse_number(text)
    if expected == "point":
        return _parse_point(text)
    if expected == "iou_track":
        return _parse_track(text)
    raise ValueError(f"unknown answer type {expected!r}")


def parse_response(raw: str, answer_type: Optional[str] = None) -> ParsedResponse:
    """Full parse: format, graph blocks and (when the type is given) the typed answer."""
    parsed = parse_format(raw)
    graphs = parse_graph_block(parsed.think)
    parsed = replace(parsed, pred_graphs=tuple(graphs) if graphs else None)
    if answer_type is None:
        return parsed
    if parsed.answer_text is None:
        return replace(parsed, answer_error="no answer block")
    try:
        return replace(parsed, parsed_answer=parse_answer(parsed.answer_text, answer_type))
    except ExtractionError as exc:
        return replace(parsed, answer_error=str(exc))


def render_response(answer: str, think: str = "", graphs: Optional[list[SceneGraph]] = None) -> str:
    """Compose a well-formatted response string (used for toy vocabularies and fixtures)."""
    parts = [think] if think else []
    for g in graphs or []:
        wire = g.to_wire()
        frame = wire.pop("frame", None)
        head = f"<graph frame={frame}>" if frame is not None else "<graph>"
        parts.append(f"{head}{json.dumps(wire, separators=(',', ':'))}</graph>")
    return f"<think>{' '.join(parts)}</think><answer>{answer}</answer>"
