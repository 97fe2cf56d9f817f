import hashlib

import numpy as np
import pytest

from smotkit.backends import BackendResponse, BackendSuite, HashingEmbedder, ScriptedTextBackend
from smotkit.backends.fixtures import ScenarioDetector, ScenarioMaskTracker, load_scenario, load_script
from smotkit.captioning import AnnotationError, SemanticAnnotator, annotate_video, first_line
from smotkit.io import load_synsets
from smotkit.prompts import PLACEHOLDERS, load_template
from smotkit.tracking import PersonTracker, Track, TrackSet

# Frozen digests of the shipped templates; a change here must be deliberate
# (bump TEMPLATE_VERSION and re-record transcripts).
GOLDEN_SHA256 = {
    "instance_caption": "a9d13ee3d641e5d2bddb4983ba601179242611a7802108c6da87f3381fe4f2bc",
    "predicate_extraction": "3b70da79fb810e26c52d609aa8c71a9186e39da96316d418a855cd039e624e2f",
    "summary": "1d03180ba923ff900036d586b7624745df0ab20cd503922364c66832d5a8e7cc",
    "synset_selection": "d789755890fa44abbfc102c9e57168250bd596e4f38ff9cf5711d802fefc4a56",
}


@pytest.mark.parametrize("template_id", sorted(PLACEHOLDERS))
def test_prompt_templates_golden(template_id):
    tpl = load_template(template_id)
    assert hashlib.sha256(tpl.text.encode("utf-8")).hexdigest() == GOLDEN_SHA256[template_id]
    for token in PLACEHOLDERS[template_id]:
        assert token in tpl.text


def test_prompt_render_replaces_every_occurrence():
    text = load_template("instance_caption").render({"{color}": "red"})
    assert "{color}" not in text
    assert "outlined by a red contour" in text
    assert "red-contoured individual" in text


def test_prompt_render_keeps_literal_braces():
    text = load_template("synset_selection").render({"{sentences[obj_id]}": "A talks.", "{definitions}": "1|a.v.01|x"})
    assert '{"wordnet-id": "<number>"}' in text
    assert text.endswith("1|a.v.01|x\n")


def test_prompt_render_requires_exact_placeholders():
    with pytest.raises(ValueError):
        load_template("instance_caption").render({})
    with pytest.raises(ValueError):
        load_template("summary").render({"{color}": "red"})
    with pytest.raises(KeyError):
        load_template("nope")


class Recorder:
    def __init__(self, inner):
        self.inner = inner
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self.inner.complete(request)


def _demo(data_dir):
    scenario = load_scenario(data_dir / "demo_scenario.json")
    frames = scenario.frames()
    tracks = PersonTracker(ScenarioDetector(scenario), ScenarioMaskTracker(scenario)).fit_predict(frames)
    suite = BackendSuite(
        vlm=Recorder(load_script(data_dir / "demo_vlm.json")),
        llm=Recorder(load_script(data_dir / "demo_llm.json")),
        embedder=HashingEmbedder(),
    )
    return frames, tracks, suite


def test_annotate_video_one_caption_call_per_identity(data_dir):
    frames, tracks, suite = _demo(data_dir)
    synsets = load_synsets(data_dir / "demo_synsets.tsv")
    ann = annotate_video(frames, tracks, suite, synsets=synsets)
    kinds = [r.media.tags["kind"] for r in suite.vlm.requests]
    assert kinds.count("summary") == 1
    targets = [r.media.tags["target"] for r in suite.vlm.requests if r.media.tags["kind"] == "instance_caption"]
    assert targets == [1, 2, 3]
    assert set(ann.captions) == {1, 2, 3}
    assert ann.summary.startswith("Two people talk")
    # summary sees raw frames, captions see rendered clips
    summary_req = suite.vlm.requests[0]
    assert all(np.array_equal(a, b) for a, b in zip(summary_req.media.frames, frames))
    cap_req = suite.vlm.requests[1]
    assert any(not np.array_equal(a, b) for a, b in zip(cap_req.media.frames, frames))
    assert "red contour" in cap_req.prompt
    assert ann.interactions[(2, 1)] == frozenset({"listen.v.01"})
    assert {(a.subject, a.object) for a in ann.alignments} == {(1, 2), (2, 1), (3, 1)}


def test_annotate_is_deterministic(data_dir):
    frames, tracks, suite = _demo(data_dir)
    synsets = load_synsets(data_dir / "demo_synsets.tsv")
    a = annotate_video(frames, tracks, suite, synsets=synsets)
    b = annotate_video(frames, tracks, suite, synsets=synsets, n_jobs=4)
    assert a.captions == b.captions and a.interactions == b.interactions and a.alignments == b.alignments


def test_stride_subsamples_payload(data_dir):
    frames, tracks, suite = _demo(data_dir)
    annotate_video(frames, tracks, suite, stride=5)
    assert all(len(r.media.frames) == 3 for r in suite.vlm.requests)  # frames 0, 5, 10


def test_caption_call_even_when_target_never_visible():
    frames = [np.full((6, 6, 3), 50, np.uint8) for _ in range(2)]
    empty = Track(1, 0).extended(np.zeros((6, 6), bool)).extended(np.zeros((6, 6), bool))
    tracks = TrackSet((empty,), 2, (6, 6), 2)
    vlm = Recorder(ScriptedTextBackend("vlm", [], default="Someone.\nextra line", strict=False))
    ann = annotate_video(frames, tracks, BackendSuite(vlm=vlm))
    assert len(vlm.requests) == 2
    assert all(np.array_equal(a, b) for a, b in zip(vlm.requests[1].media.frames, frames))
    assert ann.captions == {1: "Someone."}
    assert ann.interactions == {}


def test_stage_errors_are_collected(data_dir):
    frames, tracks, _ = _demo(data_dir)

    class Failing:
        def complete(self, request):
            if request.media.tags.get("target") == 2:
                raise RuntimeError("boom")
            return BackendResponse(text="ok.")

    with pytest.raises(AnnotationError) as err:
        annotate_video(frames, tracks, BackendSuite(vlm=Failing()))
    assert [e.stage for e in err.value.errors] == ["caption"]
    assert list(err.value.errors[0].identities) == [2]


def test_semantic_annotator_estimator(data_dir):
    frames, tracks, suite = _demo(data_dir)
    est = SemanticAnnotator(suite, selector="top1_cosine").fit(load_synsets(data_dir / "demo_synsets.tsv"))
    ann = est.predict(frames, tracks)
    assert len(suite.llm.requests) == 1  # predicate extraction only, no selection calls
    assert all(len(v) == 1 for v in ann.interactions.values())
    assert est.get_params()["selector"] == "top1_cosine"


def test_first_line():
    assert first_line("\n  A caption.  \nmore") == "A caption."
    assert first_line("") == ""
