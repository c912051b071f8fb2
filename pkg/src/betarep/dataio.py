"""Annotation and detection files.

* odgt annotations: one JSON object per line,
  ``{"ID": str, "gtboxes": [{"tag", "fbox": [x,y,w,h], "vbox": [x,y,w,h], "extra": {"ignore": 0|1}}]}``
* detections: JSON lines ``{"image": str, "score": float, "beta": [l,t,r,b,ax,bx,ay,by]}``
  with an optional ``"id"``
* pair records: CSV with header ``image,idx_a,idx_b,fiou,viou,symkl``
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .core import BetaPedestrian, PairedBoxes
from .geometry import BBox, GeometryError
from .nms import Detection

log = logging.getLogger(__name__)

PAIR_HEADER = ("image", "idx_a", "idx_b", "fiou", "viou", "symkl")


class ParseError(ValueError):
    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


class DetectionFormatError(ValueError):
    def __init__(self, msg: str, index: int):
        self.index = index
        super().__init__(f"record {index}: {msg}")


@dataclass(frozen=True)
class Person:
    paired: PairedBoxes
    ignore: bool = False
    tag: str = "person"


@dataclass(frozen=True)
class SceneAnnotation:
    image_id: str
    persons: tuple[Person, ...] = field(default_factory=tuple)
    image_size: tuple[int, int] | None = None

    def scored_persons(self) -> list[tuple[int, Person]]:
        """``(index, person)`` for persons that are not ignore-flagged."""
        return [(k, p) for k, p in enumerate(self.persons) if not p.ignore]


def _box(entry: dict, key: str) -> BBox:
    v = entry[key]
    if not (isinstance(v, (list, tuple)) and len(v) == 4):
        raise GeometryError(f"{key} must be [x, y, w, h]")
    return BBox.from_xywh(*(float(e) for e in v))


def parse_odgt(line: str, lineno: int | None = None) -> SceneAnnotation:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON ({exc.msg})", lineno) from exc
    if not isinstance(obj, dict) or "ID" not in obj:
        raise ParseError("record lacks an 'ID' field", lineno)
    persons = []
    for k, entry in enumerate(obj.get("gtboxes", [])):
        if "fbox" not in entry or "vbox" not in entry:
            log.warning("%s box %d: missing fbox/vbox, skipped", obj["ID"], k)
            continue
        try:
            full = _box(entry, "fbox")
            vis = _box(entry, "vbox")
            paired = PairedBoxes(full, vis)
        except (GeometryError, TypeError, ValueError) as exc:
            log.warning("%s box %d: invalid geometry (%s), skipped", obj["ID"], k, exc)
            continue
        tag = str(entry.get("tag", "person"))
        extra = entry.get("extra") or {}
        ignore = bool(int(extra.get("ignore", 0))) or tag != "person"
        persons.append(Person(paired, ignore, tag))
    size = None
    if "width" in obj and "height" in obj:
        size = (int(obj["width"]), int(obj["height"]))
    return SceneAnnotation(str(obj["ID"]), tuple(persons), size)


def _num(v: float):
    return int(v) if float(v).is_integer() else v


def serialize_odgt(scene: SceneAnnotation) -> str:
    boxes = []
    for p in scene.persons:
        boxes.append(
            {
                "tag": p.tag,
                "fbox": [_num(v) for v in p.paired.full.as_xywh()],
                "vbox": [_num(v) for v in p.paired.visible.as_xywh()],
                "extra": {"ignore": int(p.ignore)},
            }
        )
    obj = {"ID": scene.image_id, "gtboxes": boxes}
    if scene.image_size is not None:
        obj["width"], obj["height"] = scene.image_size
    return json.dumps(obj)


def iter_odgt(lines: Iterable[str]) -> Iterator[SceneAnnotation]:
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            yield parse_odgt(line, lineno)


def read_odgt(path) -> list[SceneAnnotation]:
    with open(path, encoding="utf-8") as fh:
        scenes = list(iter_odgt(fh))
    ids = [s.image_id for s in scenes]
    if len(set(ids)) != len(ids):
        raise ParseError(f"duplicate image IDs in {path}")
    return scenes


def write_odgt(path, scenes: Iterable[SceneAnnotation]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in scenes:
            fh.write(serialize_odgt(s) + "\n")


def detection_record(image: str, det: Detection) -> dict:
    rec = {"image": image, "score": det.score, "beta": det.pedestrian.as_array().tolist()}
    if det.id is not None and det.id != default_id(rec["beta"]):
        rec["id"] = det.id
    return rec


def default_id(beta: Sequence[float]) -> tuple:
    """Ids derived from the parameters keep tie-breaking independent of file order."""
    return tuple(float(v) for v in beta)


def parse_detection(obj, index: int) -> tuple[str, Detection]:
    if not isinstance(obj, dict):
        raise DetectionFormatError("expected a JSON object", index)
    for key in ("image", "score", "beta"):
        if key not in obj:
            raise DetectionFormatError(f"missing {key!r}", index)
    beta = obj["beta"]
    if not (isinstance(beta, list) and len(beta) == 8 and all(isinstance(v, (int, float)) for v in beta)):
        raise DetectionFormatError("'beta' must be a list of 8 numbers", index)
    score = obj["score"]
    if not isinstance(score, (int, float)) or not math.isfinite(score):
        raise DetectionFormatError("'score' must be a finite number", index)
    det_id = obj.get("id", default_id(beta))
    if isinstance(det_id, list):
        det_id = tuple(det_id)
    try:
        det = Detection(BetaPedestrian.from_array(beta), float(score), det_id)
    except ValueError as exc:
        raise DetectionFormatError(str(exc), index) from exc
    return str(obj["image"]), det


def read_detections(path) -> list[tuple[str, Detection]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DetectionFormatError(f"malformed JSON ({exc.msg})", index) from exc
            out.append(parse_detection(obj, index))
    return out


def write_detections(path, items: Iterable[tuple[str, Detection]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image, det in items:
            fh.write(json.dumps(detection_record(image, det)) + "\n")


def write_pair_records(path_or_file, records) -> None:
    """Write :class:`~betarep.evaluation.PairRecord` rows as CSV."""
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PAIR_HEADER)
        for r in records:
            w.writerow([r.image, r.idx_a, r.idx_b, repr(r.fiou), repr(r.viou), repr(r.sym_kl)])
    finally:
        if own:
            fh.close()


def read_pair_records(path):
    from .evaluation import PairRecord

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        PairRecord(r["image"], int(r["idx_a"]), int(r["idx_b"]), float(r["fiou"]), float(r["viou"]), float(r["symkl"]))
        for r in rows
    ]
