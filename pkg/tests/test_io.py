import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from smotkit.interactions.retrieval import AlignmentRecord
from smotkit.io import (
    AnnotationFile,
    EmptyVideoError,
    FormatError,
    TrackRecord,
    annotation_from_tracks,
    dumps_annotation,
    load_annotation_dir,
    load_cluster_file,
    load_label_list,
    load_synsets,
    load_video,
    loads_annotation,
    rle_decode,
    rle_encode,
    save_annotation,
    save_video,
)
from smotkit.tracking import Track, TrackSet


@settings(max_examples=200, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_rle_roundtrip(mask):
    rle = rle_encode(mask)
    assert sum(rle["counts"]) == mask.size
    assert np.array_equal(rle_decode(rle), mask)


def test_rle_known_encodings():
    assert rle_encode(np.array([[0, 1], [1, 1]], bool))["counts"] == [1, 3]
    assert rle_encode(np.ones((2, 2), bool))["counts"] == [0, 4]
    assert rle_encode(np.array([[1, 0, 0], [1, 1, 0]], bool)) == {"size": [2, 3], "counts": [0, 1, 2, 2, 1]}
    with pytest.raises(FormatError):
        rle_decode({"size": [2, 2], "counts": [1, 2]})


def _ann():
    m = np.zeros((4, 5), bool)
    m[1:3, 1:4] = True
    tr = Track(1, 0).extended(m).extended(np.zeros((4, 5), bool))
    tr2 = Track(2, 1).extended(m)
    ann = annotation_from_tracks(TrackSet((tr, tr2), 2, (4, 5), 3), "vid", provenance="fixture:x")
    ann.summary = "Two people."
    ann.captions = {1: "One.", 2: "Two."}
    ann.interactions = {(1, 2): ["talk.v.01", "talk.v.01"]}
    ann.__post_init__()
    ann.alignments = [AlignmentRecord(1, 2, "talk", (("talk.v.01", 0.9),), "talk.v.01")]
    return ann


def test_annotation_roundtrip(tmp_path):
    ann = _ann()
    text = dumps_annotation(ann)
    back = loads_annotation(text)
    assert dumps_annotation(back) == text
    assert back.interactions == {(1, 2): ["talk.v.01"]}
    assert back.tracks[0].boxes == {0: (1.0, 1.0, 3.0, 2.0)}
    ts = back.to_trackset()
    assert [t.identity for t in ts] == [1, 2]
    assert ts.tracks[1].birth_frame == 1
    assert np.array_equal(ts.tracks[0].masks[0], ann.to_trackset().tracks[0].masks[0])
    save_annotation(ann, tmp_path / "a.jsonl")
    assert set(load_annotation_dir(tmp_path)) == {"vid"}
    assert not list(tmp_path.glob(".*"))  # no temp files left behind


@pytest.mark.parametrize("text, match", [
    ("", "no header"),
    ('{"type": "caption", "id": 1, "text": "x"}\n', "before header"),
    ('{"type": "header", "schema_version": 99, "video_id": "v", "num_frames": 1}\n', "schema_version"),
    ("not json\n", "invalid JSON"),
])
def test_annotation_format_errors(text, match):
    with pytest.raises(FormatError, match=match):
        loads_annotation(text)


def test_annotation_record_errors():
    header = dumps_annotation(AnnotationFile("v", 2)).splitlines()[0]
    for line, match in [
        ('{"type": "interaction", "subject": 1, "object": 1, "labels": []}', "self interaction"),
        ('{"type": "bogus"}', "unknown record"),
        ('{"type": "caption", "text": "x"}', "malformed caption"),
        (header, "second header"),
    ]:
        with pytest.raises(FormatError, match=match):
            loads_annotation(header + "\n" + line + "\n", "f.jsonl")
    ann = AnnotationFile("v", 1, tracks=[TrackRecord(1, 0, {3: (0, 0, 1, 1)})])
    with pytest.raises(FormatError, match="outside"):
        ann.boxes_by_frame()
    with pytest.raises(FormatError, match="frame size"):
        ann.to_trackset()


def test_load_video(tmp_path, rng):
    frames = [rng.integers(0, 255, (4, 6, 3), dtype=np.uint8) for _ in range(3)]
    save_video(frames, tmp_path / "v")
    back = load_video(tmp_path / "v")
    assert all(np.array_equal(a, b) for a, b in zip(frames, back))
    (tmp_path / "v" / "000001.png").unlink()
    with pytest.raises(FormatError, match="gaps"):
        load_video(tmp_path / "v")
    (tmp_path / "e").mkdir()
    with pytest.raises(EmptyVideoError):
        load_video(tmp_path / "e")
    with pytest.raises(EmptyVideoError):
        load_video(tmp_path / "missing")
    Image.fromarray(frames[0]).save(tmp_path / "v" / "000001.png")
    Image.fromarray(np.zeros((5, 6, 3), np.uint8)).save(tmp_path / "v" / "000003.png")
    with pytest.raises(FormatError, match="differing sizes"):
        load_video(tmp_path / "v")


def test_load_synsets(tmp_path):
    p = tmp_path / "s.tsv"
    p.write_text("id\tlemma\tgloss\n# comment\ntalk.v.01\t\texchange words\n"
                 '{"id": "look.v.01", "gloss": "use the eyes"}\nhigh_five\t\t\n')
    syn = load_synsets(p)
    assert [s.id for s in syn] == ["talk.v.01", "look.v.01", "high_five"]
    assert syn[0].lemma == "talk"
    assert syn[2].gloss == "high five"
    p.write_text("talk.v.01\ttalk\tx\ntalk.v.01\ttalk\ty\n")
    with pytest.raises(FormatError, match="duplicate"):
        load_synsets(p)
    p.write_text("talk.v.01\tx\n")
    with pytest.raises(FormatError, match="3 tab-separated"):
        load_synsets(p)
    p.write_text("# nothing\n")
    with pytest.raises(FormatError, match="no synsets"):
        load_synsets(p)


def test_cluster_and_label_files(tmp_path):
    p = tmp_path / "c.tsv"
    p.write_text("talk.v.01\tcommunicate\nlisten.v.01\tcommunicate\n")
    assert load_cluster_file(p) == {"talk.v.01": "communicate", "listen.v.01": "communicate"}
    p.write_text("talk.v.01\ta\ntalk.v.01\tb\n")
    with pytest.raises(FormatError, match="twice"):
        load_cluster_file(p)
    p.write_text("talk.v.01\n")
    with pytest.raises(FormatError):
        load_cluster_file(p)
    q = tmp_path / "f.txt"
    q.write_text("talk.v.01\n\n  look.v.01 \n")
    assert load_label_list(q) == ["talk.v.01", "look.v.01"]
