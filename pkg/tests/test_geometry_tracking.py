import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import raster_iou
from smotkit.backends.fixtures import EchoMaskTracker, ScenarioDetector, ScenarioMaskTracker, load_scenario
from smotkit.config import TrackerConfig
from smotkit.geometry import BoundingBox, Detection, InstanceMask, filter_detections, iou, mask_tight_box
from smotkit.tracking import PersonTracker, StageError, Track, TrackSet, gate_new_identity, step_tracker

int_box = st.tuples(st.integers(0, 12), st.integers(0, 12), st.integers(1, 8), st.integers(1, 8))


@settings(max_examples=300, deadline=None)
@given(int_box, int_box)
def test_iou_matches_cell_count_oracle(a, b):
    assert iou(BoundingBox(*a), BoundingBox(*b)) == pytest.approx(raster_iou(a, b), abs=1e-12)


@given(int_box, int_box)
def test_iou_symmetric_and_bounded(a, b):
    ab = iou(BoundingBox(*a), BoundingBox(*b))
    assert ab == iou(BoundingBox(*b), BoundingBox(*a))
    assert 0.0 <= ab <= 1.0


def test_iou_examples():
    assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(0, 0, 2, 2)) == 1.0
    assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(2, 0, 2, 2)) == 0.0
    assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 0, 2, 2)) == pytest.approx(1 / 3)


def test_box_validation():
    with pytest.raises(ValueError):
        BoundingBox(0, 0, 0, 3)
    with pytest.raises(ValueError):
        BoundingBox(float("nan"), 0, 1, 1)
    with pytest.raises(ValueError):
        Detection(BoundingBox(0, 0, 1, 1), 1.5)


def test_tight_box_single_pixel_half_open():
    m = np.zeros((6, 6), bool)
    m[4, 3] = True
    assert mask_tight_box(m) == BoundingBox(3, 4, 1, 1)
    assert mask_tight_box(np.zeros((3, 3), bool)) is None


@settings(max_examples=100, deadline=None)
@given(int_box)
def test_tight_box_of_rasterized_box_roundtrips(b):
    box = BoundingBox(*b)
    assert mask_tight_box(box.to_mask(24, 24)) == box


def test_filter_detections_person_and_confidence():
    box = BoundingBox(0, 0, 4, 4)
    dets = [Detection(box, 0.8), Detection(box, 0.79), Detection(box, 0.95, "dog"), Detection(box, 0.9)]
    kept = filter_detections(dets)
    assert kept == [dets[0], dets[3]]


def test_gate_threshold_is_strict():
    cfg = TrackerConfig(tau_new=0.5)
    det = Detection(BoundingBox(0, 0, 2, 2), 0.9)
    half = BoundingBox(0, 0, 2, 1)  # IoU exactly 0.5
    assert gate_new_identity(det, [half], cfg) is False
    assert gate_new_identity(det, [BoundingBox(0, 0, 1, 1)], cfg) is True
    assert gate_new_identity(det, [None], cfg) is True
    assert gate_new_identity(det, [], cfg) is True


def _frame(h=20, w=20):
    return np.zeros((h, w, 3), np.uint8)


def test_step_tracker_births_and_no_reassociation():
    trk = EchoMaskTracker()
    a = Detection(BoundingBox(0, 0, 5, 5), 0.9)
    b = Detection(BoundingBox(10, 10, 5, 5), 0.9)
    s = step_tracker(_frame(), [a, b], TrackSet(), trk)
    assert s.identities == [1, 2]
    # same detections again: both gated by propagated masks
    s = step_tracker(_frame(), [a, b], s, trk)
    assert s.identities == [1, 2]
    assert s.num_frames == 2
    assert s.get(1).box_at(1) == a.box


def test_same_frame_newborns_gate_each_other():
    trk = EchoMaskTracker()
    a = Detection(BoundingBox(0, 0, 6, 6), 0.9)
    dup = Detection(BoundingBox(1, 0, 6, 6), 0.95)
    s = step_tracker(_frame(), [a, dup], TrackSet(), trk)
    assert s.identities == [1]


def test_ids_never_reused_and_empty_tracks_stay():
    class Vanishing(EchoMaskTracker):
        def propagate(self, frame, t, tracks):
            return {tr.identity: np.zeros(frame.shape[:2], bool) for tr in tracks}

    trk = Vanishing()
    det = Detection(BoundingBox(2, 2, 4, 4), 0.9)
    s = TrackSet()
    for _ in range(3):
        s = step_tracker(_frame(), [det], s, trk)
    # the mask vanishes each frame, so the same detection is reborn each time
    assert s.identities == [1, 2, 3]
    assert s.next_id == 4
    assert s.get(1).mask_at(2).empty
    assert s.get(1).current_box() is None


def test_stage_error_wraps_backend_failure():
    class Broken(EchoMaskTracker):
        def prompt(self, frame, t, identity, box):
            raise RuntimeError("model offline")

    with pytest.raises(StageError) as err:
        step_tracker(_frame(), [Detection(BoundingBox(0, 0, 3, 3), 0.9)], TrackSet(), Broken())
    assert err.value.stage == "track"
    assert list(err.value.identities) == [1]


def test_frame_shape_change_rejected():
    s = step_tracker(_frame(), [], TrackSet(), EchoMaskTracker())
    with pytest.raises(StageError):
        step_tracker(_frame(10, 10), [], s, EchoMaskTracker())


def test_person_tracker_estimator_api(data_dir):
    scenario = load_scenario(data_dir / "demo_scenario.json")
    est = PersonTracker(ScenarioDetector(scenario), ScenarioMaskTracker(scenario))
    params = est.get_params()
    assert params["tau_new"] == 0.35 and params["confidence_threshold"] == 0.8
    tracks = est.fit_predict(scenario.frames())
    assert tracks.identities == [1, 2, 3]
    assert tracks.get(3).birth_frame == 4
    # tracks follow the actors exactly
    for t in range(scenario.num_frames):
        truth = scenario.actor_boxes(t)
        for identity, box in tracks.boxes_by_frame()[t].items():
            assert box == truth[identity]
    # incremental use gives the same result
    inc = PersonTracker(ScenarioDetector(scenario), ScenarioMaskTracker(scenario))
    for f in scenario.frames():
        inc.partial_fit(f)
    assert inc.tracks_ == tracks


def test_instance_mask_and_track_equality():
    m = np.zeros((4, 4), bool)
    m[1, 1] = True
    assert InstanceMask(0, 1, m) == InstanceMask(0, 1, m.copy())
    tr = Track(1, 0).extended(m)
    assert tr == Track(1, 0).extended(m.copy())
    assert tr.box_at(0) == BoundingBox(1, 1, 1, 1)
