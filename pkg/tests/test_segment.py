"""Scene segmentation: cut placement, short-clip filtering, partition
and monotonicity properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datacube.config import FilterPolicy
from datacube.errors import ValidationError
from datacube.ingest import content_scores, discard_short, segment


class ArrayStream:
    """Frames given explicitly as per-frame constant luminance values."""

    def __init__(self, values, fps=10.0, shape=(8, 9)):
        self.values = list(values)
        self.fps = fps
        self.frame_count = len(self.values)
        self.shape = shape

    def frame_at(self, index):
        return np.full(self.shape, self.values[index], dtype=np.float64)


def oracle_boundaries(values, threshold):
    """Independent linear scan: cut before i iff |v_i - v_{i-1}| > threshold."""
    cuts = [0]
    for i in range(1, len(values)):
        if abs(values[i] - values[i - 1]) > threshold:
            cuts.append(i)
    cuts.append(len(values))
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]


def test_three_scene_stream_matches_oracle():
    values = [60.0] * 100 + [200.0] * 100 + [90.0] * 100
    stream = ArrayStream(values, fps=10.0)
    expected = oracle_boundaries(values, 26.0)
    assert expected == [(0, 100), (100, 200), (200, 300)]
    assert segment(stream, FilterPolicy()) == expected


def test_constant_stream_single_boundary():
    stream = ArrayStream([128.0] * 57)
    assert segment(stream, FilterPolicy()) == [(0, 57)]


def test_default_scene_threshold_is_26():
    assert FilterPolicy().scene_threshold == 26.0
    # a jump of exactly 26 must NOT cut (strictly greater required)
    stream = ArrayStream([100.0] * 10 + [126.0] * 10)
    assert segment(stream, FilterPolicy()) == [(0, 20)]
    stream = ArrayStream([100.0] * 10 + [126.1] * 10)
    assert segment(stream, FilterPolicy()) == [(0, 10), (10, 20)]


def test_empty_stream_rejected():
    with pytest.raises(ValidationError, match="empty input"):
        segment(ArrayStream([]), FilterPolicy())


def test_content_scores_are_mean_absolute_difference():
    stream = ArrayStream([0.0, 10.0, 10.0, 255.0])
    scores = content_scores(stream)
    assert scores[0] == 0.0
    assert scores[1] == pytest.approx(10.0)
    assert scores[2] == pytest.approx(0.0)
    assert scores[3] == pytest.approx(245.0)


@settings(max_examples=60, deadline=None)
@given(
    values=st.lists(st.floats(min_value=0, max_value=255), min_size=1, max_size=120),
    threshold=st.floats(min_value=1.0, max_value=120.0),
)
def test_partition_property(values, threshold):
    stream = ArrayStream(values)
    policy = FilterPolicy(scene_threshold=threshold)
    boundaries = segment(stream, policy)
    # sorted, disjoint, contiguous, exhaustive over [0, frame_count)
    assert boundaries[0][0] == 0
    assert boundaries[-1][1] == stream.frame_count
    for (s1, e1), (s2, e2) in zip(boundaries, boundaries[1:]):
        assert s1 < e1
        assert e1 == s2
    assert boundaries == oracle_boundaries(values, threshold)


@settings(max_examples=40, deadline=None)
@given(
    values=st.lists(st.floats(min_value=0, max_value=255), min_size=2, max_size=80),
    low=st.floats(min_value=1.0, max_value=80.0),
    bump=st.floats(min_value=0.0, max_value=100.0),
)
def test_raising_threshold_never_adds_cuts(values, low, bump):
    stream = ArrayStream(values)
    cuts_low = len(segment(stream, FilterPolicy(scene_threshold=low)))
    cuts_high = len(segment(stream, FilterPolicy(scene_threshold=low + bump)))
    assert cuts_high <= cuts_low


def test_discard_short_keeps_only_long_clips():
    # durations 4s, 8s, 1s at 10 fps
    boundaries = [(0, 40), (40, 120), (120, 130)]
    clips = discard_short(boundaries, 10.0, FilterPolicy(), parent_video="vd_1")
    assert [(c.start_s, c.end_s) for c in clips] == [(4.0, 12.0)]


def test_exactly_five_seconds_is_retained():
    clips = discard_short([(0, 50)], 10.0, FilterPolicy(), parent_video="vd_1")
    assert len(clips) == 1
    assert clips[0].duration_s == pytest.approx(5.0)


def test_discard_short_empty_input():
    assert discard_short([], 10.0, FilterPolicy()) == []


def test_clip_seconds_derive_from_frames_and_fps():
    clips = discard_short([(30, 180)], 25.0, FilterPolicy(), parent_video="vd_1")
    assert clips[0].start_s == pytest.approx(1.2)
    assert clips[0].end_s == pytest.approx(7.2)
    assert clips[0].start_frame == 30
    assert clips[0].end_frame == 180
