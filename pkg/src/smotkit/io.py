"""File formats: frame directories, annotation files, vocabularies, reports."""
from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from PIL import Image

from .geometry import BoundingBox, mask_tight_box
from .interactions.retrieval import AlignmentRecord, Synset
from .tracking import Track, TrackSet

SCHEMA_VERSION = 1
FRAME_PATTERN = re.compile(r"^(\d+)\.(png|bmp|tif|tiff|ppm)$", re.I)


class FormatError(ValueError):
    """A file does not follow its expected format."""


class EmptyVideoError(FormatError):
    """The frame directory is missing or holds no frames."""


# -- run-length masks -----------------------------------------------------

def rle_encode(mask: np.ndarray) -> dict:
    """Row-major run lengths starting with a (possibly empty) run of zeros."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return {"size": list(np.shape(mask)), "counts": []}
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return {"size": [int(s) for s in np.shape(mask)], "counts": [int(c) for c in counts]}


def rle_decode(rle: Mapping[str, Any]) -> np.ndarray:
    h, w = rle["size"]
    counts = rle["counts"]
    if sum(counts) != h * w:
        raise FormatError(f"RLE counts sum to {sum(counts)}, expected {h * w}")
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    return np.repeat(values, counts).reshape(h, w)


# -- frame directories ----------------------------------------------------

def load_video(path: str | Path) -> list[np.ndarray]:
    """Frames from a directory of numbered lossless images, in index order."""
    path = Path(path)
    if not path.is_dir():
        raise EmptyVideoError(f"{path} is not a frame directory")
    indexed = {}
    for entry in path.iterdir():
        m = FRAME_PATTERN.match(entry.name)
        if m:
            idx = int(m.group(1))
            if idx in indexed:
                raise FormatError(f"{path}: two frames with index {idx}")
            indexed[idx] = entry
    if not indexed:
        raise EmptyVideoError(f"{path} contains no frames")
    lo, hi = min(indexed), max(indexed)
    missing = [i for i in range(lo, hi + 1) if i not in indexed]
    if missing:
        raise FormatError(f"{path}: frame numbering has gaps, missing indices {missing}")
    frames = []
    for i in range(lo, hi + 1):
        with Image.open(indexed[i]) as img:
            frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8).copy())
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise FormatError(f"{path}: frames have differing sizes {sorted(shapes)}")
    return frames


def save_video(frames: Sequence[np.ndarray], path: str | Path, digits: int = 6) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(frames):
        Image.fromarray(np.asarray(frame, dtype=np.uint8)).save(path / f"{t:0{digits}d}.png")


# -- annotation files -----------------------------------------------------

@dataclass
class TrackRecord:
    identity: int
    birth_frame: int
    boxes: dict[int, tuple[float, float, float, float]] = field(default_factory=dict)
    masks: dict[int, dict] | None = None

    def __post_init__(self):
        self.boxes = {int(t): tuple(float(v) for v in b) for t, b in self.boxes.items()}


@dataclass
class AnnotationFile:
    video_id: str
    num_frames: int = 0
    frame_size: tuple[int, int] | None = None
    provenance: str = ""
    tracks: list[TrackRecord] = field(default_factory=list)
    summary: str | None = None
    captions: dict[int, str] = field(default_factory=dict)
    interactions: dict[tuple[int, int], list[str]] = field(default_factory=dict)
    alignments: list[AlignmentRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_size is not None:
            self.frame_size = tuple(int(v) for v in self.frame_size)
        self.interactions = {
            (int(i), int(j)): sorted(set(labels)) for (i, j), labels in self.interactions.items()
        }

    def boxes_by_frame(self) -> list[dict[int, BoundingBox]]:
        frames: list[dict[int, BoundingBox]] = [{} for _ in range(self.num_frames)]
        for tr in self.tracks:
            for t, b in tr.boxes.items():
                if not 0 <= t < self.num_frames:
                    raise FormatError(f"track {tr.identity} has a box at frame {t} outside the video")
                frames[t][tr.identity] = BoundingBox(*b)
        return frames

    def interaction_sets(self) -> dict[tuple[int, int], frozenset[str]]:
        return {pair: frozenset(v) for pair, v in self.interactions.items()}

    def to_trackset(self) -> TrackSet:
        """Rebuild a TrackSet; requires stored masks."""
        if self.frame_size is None:
            raise FormatError(f"{self.video_id}: annotation has no frame size")
        h, w = self.frame_size
        tracks = []
        for rec in sorted(self.tracks, key=lambda r: r.identity):
            if rec.masks is None:
                raise FormatError(f"{self.video_id}: track {rec.identity} has no masks")
            tr = Track(rec.identity, rec.birth_frame)
            for t in range(rec.birth_frame, self.num_frames):
                rle = rec.masks.get(t)
                tr = tr.extended(rle_decode(rle) if rle is not None else np.zeros((h, w), dtype=bool))
            tracks.append(tr)
        next_id = max((r.identity for r in self.tracks), default=0) + 1
        return TrackSet(tuple(tracks), self.num_frames, (h, w), next_id)


def annotation_from_tracks(tracks: TrackSet, video_id: str, provenance: str = "",
                           include_masks: bool = True, metadata: dict | None = None) -> AnnotationFile:
    records = []
    for tr in tracks:
        boxes = {}
        masks = {} if include_masks else None
        for k, (mask, box) in enumerate(zip(tr.masks, tr.boxes)):
            t = tr.birth_frame + k
            if box is not None:
                boxes[t] = box.as_tuple()
                if include_masks:
                    masks[t] = rle_encode(mask)
        records.append(TrackRecord(tr.identity, tr.birth_frame, boxes, masks))
    return AnnotationFile(video_id, tracks.num_frames, tracks.frame_shape, provenance, records,
                          metadata=dict(metadata or {}))


def _line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def dumps_annotation(ann: AnnotationFile) -> str:
    lines = [_line({
        "type": "header", "schema_version": SCHEMA_VERSION, "video_id": ann.video_id,
        "num_frames": ann.num_frames,
        "frame_size": list(ann.frame_size) if ann.frame_size is not None else None,
        "provenance": ann.provenance, "metadata": ann.metadata,
    })]
    for tr in sorted(ann.tracks, key=lambda r: r.identity):
        rec = {
            "type": "track", "id": tr.identity, "birth_frame": tr.birth_frame,
            "boxes": [[t, *tr.boxes[t]] for t in sorted(tr.boxes)],
        }
        if tr.masks is not None:
            rec["masks"] = [[t, tr.masks[t]] for t in sorted(tr.masks)]
        lines.append(_line(rec))
    if ann.summary is not None:
        lines.append(_line({"type": "summary", "text": ann.summary}))
    for identity in sorted(ann.captions):
        lines.append(_line({"type": "caption", "id": identity, "text": ann.captions[identity]}))
    for (i, j) in sorted(ann.interactions):
        lines.append(_line({"type": "interaction", "subject": i, "object": j,
                            "labels": sorted(ann.interactions[(i, j)])}))
    for rec in ann.alignments:
        lines.append(_line({"type": "alignment", **rec.to_dict()}))
    return "\n".join(lines) + "\n"


def loads_annotation(text: str, source: str = "<string>") -> AnnotationFile:
    ann = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{source}:{lineno}"
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{where}: invalid JSON ({exc.msg})") from exc
        kind = rec.get("type")
        try:
            if kind == "header":
                if ann is not None:
                    raise FormatError(f"{where}: second header record")
                if rec.get("schema_version") != SCHEMA_VERSION:
                    raise FormatError(f"{where}: unsupported schema_version {rec.get('schema_version')!r}")
                ann = AnnotationFile(rec["video_id"], int(rec["num_frames"]), rec.get("frame_size"),
                                     rec.get("provenance", ""), metadata=rec.get("metadata", {}))
                continue
            if ann is None:
                raise FormatError(f"{where}: record before header")
            if kind == "track":
                masks = rec.get("masks")
                ann.tracks.append(TrackRecord(
                    int(rec["id"]), int(rec["birth_frame"]),
                    {int(b[0]): tuple(b[1:5]) for b in rec["boxes"]},
                    {int(t): m for t, m in masks} if masks is not None else None,
                ))
            elif kind == "summary":
                ann.summary = rec["text"]
            elif kind == "caption":
                ann.captions[int(rec["id"])] = rec["text"]
            elif kind == "interaction":
                i, j = int(rec["subject"]), int(rec["object"])
                if i == j:
                    raise FormatError(f"{where}: self interaction on identity {i}")
                ann.interactions[(i, j)] = sorted(set(rec["labels"]))
            elif kind == "alignment":
                ann.alignments.append(AlignmentRecord.from_dict(rec))
            else:
                raise FormatError(f"{where}: unknown record type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{where}: malformed {kind} record ({type(exc).__name__}: {exc})") from exc
    if ann is None:
        raise FormatError(f"{source}: no header record")
    return ann


def save_annotation(ann: AnnotationFile, path: str | Path) -> None:
    atomic_write_text(path, dumps_annotation(ann))


def load_annotation(path: str | Path) -> AnnotationFile:
    path = Path(path)
    return loads_annotation(path.read_text(encoding="utf-8"), str(path))


def load_annotation_dir(path: str | Path) -> dict[str, AnnotationFile]:
    """All ``*.jsonl`` annotations in a directory keyed by video id."""
    path = Path(path)
    if not path.is_dir():
        raise NotADirectoryError(f"{path} is not a directory of annotation files")
    out = {}
    for p in sorted(path.glob("*.jsonl")):
        ann = load_annotation(p)
        if ann.video_id in out:
            raise FormatError(f"duplicate video id {ann.video_id} in {path}")
        out[ann.video_id] = ann
    return out


# -- vocabularies and label-space definitions ------------------------------

def _data_lines(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped.strip() or stripped.lstrip().startswith("#"):
                continue
            yield lineno, stripped


def load_synsets(path: str | Path) -> list[Synset]:
    """Vocabulary file: TSV ``id<TAB>lemma<TAB>gloss`` or JSONL with those keys.

    An empty lemma is derived from the id. Labels that are not WordNet ids
    become pseudo-synsets whose gloss defaults to the label text.
    """
    path = Path(path)
    synsets: list[Synset] = []
    seen: dict[str, int] = {}
    for lineno, line in _data_lines(path):
        where = f"{path}:{lineno}"
        if line.lstrip().startswith("{"):
            try:
                rec = json.loads(line)
                sid, lemma, gloss = rec["id"], rec.get("lemma", ""), rec.get("gloss", "")
            except (json.JSONDecodeError, KeyError) as exc:
                raise FormatError(f"{where}: malformed synset record ({exc})") from exc
        else:
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{where}: expected 3 tab-separated fields (id, lemma, gloss), got {len(parts)}")
            sid, lemma, gloss = parts
        sid = sid.strip()
        if sid == "id" and lemma.strip() == "lemma":
            continue
        if sid in seen:
            raise FormatError(f"{where}: duplicate synset id {sid!r} (first on line {seen[sid]})")
        seen[sid] = lineno
        try:
            syn = Synset(sid, gloss.strip() or sid.replace("_", " "), lemma.strip())
        except ValueError as exc:
            raise FormatError(f"{where}: {exc}") from exc
        synsets.append(syn)
    if not synsets:
        raise FormatError(f"{path}: no synsets")
    return synsets


def load_label_list(path: str | Path) -> list[str]:
    return [line.strip() for _, line in _data_lines(Path(path))]


def load_cluster_file(path: str | Path) -> dict[str, str]:
    """``label<TAB>cluster`` pairs."""
    path = Path(path)
    out: dict[str, str] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected label<TAB>cluster")
        label, cluster = parts[0].strip(), parts[1].strip()
        if label in out:
            raise FormatError(f"{path}:{lineno}: label {label!r} assigned twice")
        out[label] = cluster
    return out


# -- generic ----------------------------------------------------------------

def atomic_write_text(path: str | Path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_jsonl(records: Iterable[dict]) -> str:
    return "".join(_line(r) + "\n" for r in records)
