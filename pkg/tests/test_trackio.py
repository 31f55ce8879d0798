import numpy as np
import pytest

from raceline.errors import (
    DegenerateTrack,
    EmptyLine,
    MalformedRow,
    NonPositiveWidth,
)
from raceline.trackio import (
    RacingLine,
    Track,
    parse_raceline_csv,
    parse_track_csv,
    write_raceline_csv,
    write_track_csv,
)

SQUARE = "0,0,2,2\n10,0,2,2\n10,10,2,2\n0,10,2,2\n"


class TestParseTrack:
    def test_square(self):
        track = parse_track_csv(SQUARE)
        assert len(track) == 4
        assert track.closed
        np.testing.assert_array_equal(track.points[1], [10.0, 0.0])
        assert np.all(track.halfwidth_left == 2.0)
        assert np.all(track.halfwidth_right == 2.0)

    def test_comments_and_crlf(self):
        text = "# header\r\n0,0,2,2\r\n10,0,2,2\r\n10,10,2,2\r\n"
        track = parse_track_csv(text)
        assert len(track) == 3

    def test_open_marker(self):
        track = parse_track_csv("# open\n" + SQUARE)
        assert not track.closed

    def test_name_comment(self):
        track = parse_track_csv("# name: monza\n" + SQUARE)
        assert track.name == "monza"

    def test_two_rows_degenerate(self):
        with pytest.raises(DegenerateTrack):
            parse_track_csv("0,0,2,2\n1,0,2,2\n")

    def test_negative_width(self):
        with pytest.raises(NonPositiveWidth):
            parse_track_csv("0,0,-1,2\n10,0,2,2\n10,10,2,2\n")

    def test_wrong_arity_rejected(self):
        with pytest.raises(MalformedRow):
            parse_track_csv("0,0,2\n10,0,2,2\n10,10,2,2\n")
        with pytest.raises(MalformedRow):
            parse_track_csv(SQUARE + "1,2,3,4,5\n")

    def test_non_numeric_rejected(self):
        with pytest.raises(MalformedRow):
            parse_track_csv("0,zero,2,2\n10,0,2,2\n10,10,2,2\n")

    def test_coincident_points_rejected(self):
        with pytest.raises(DegenerateTrack):
            parse_track_csv("0,0,2,2\n0,0,2,2\n10,10,2,2\n")


class TestTrackRoundTrip:
    def test_square_round_trip(self):
        track = parse_track_csv(SQUARE)
        again = parse_track_csv(write_track_csv(track))
        np.testing.assert_array_equal(track.points, again.points)
        np.testing.assert_array_equal(track.halfwidth_left, again.halfwidth_left)
        assert track.closed == again.closed and track.name == again.name

    def test_random_tracks_bit_exact(self):
        rng = np.random.default_rng(42)
        for closed in (True, False):
            pts = rng.normal(scale=100.0, size=(50, 2)).cumsum(axis=0)
            track = Track(name="rnd", points=pts,
                          halfwidth_left=rng.uniform(1.0, 9.0, 50),
                          halfwidth_right=rng.uniform(1.0, 9.0, 50),
                          closed=closed)
            again = parse_track_csv(write_track_csv(track))
            np.testing.assert_array_equal(track.points, again.points)
            np.testing.assert_array_equal(track.halfwidth_left, again.halfwidth_left)
            np.testing.assert_array_equal(track.halfwidth_right, again.halfwidth_right)
            assert again.closed == closed

    def test_widths_survive_12_digits(self):
        w = 3.14159265358979
        track = Track(name="t", points=np.array([[0, 0], [10, 0], [10, 10.0]]),
                      halfwidth_left=np.full(3, w), halfwidth_right=np.full(3, w))
        again = parse_track_csv(write_track_csv(track))
        assert abs(again.halfwidth_left[0] - w) < 1e-12 * w


class TestRacelineCsv:
    def test_single_waypoint(self):
        line = RacingLine(w=np.array([0.5]), points=np.array([[0.0, 0.0]]))
        text = write_raceline_csv(line)
        assert "0,0.0,0.0,0.5" in text
        again = parse_raceline_csv(text)
        assert again.w[0] == 0.5

    def test_round_trip_100_random(self):
        rng = np.random.default_rng(7)
        line = RacingLine(w=rng.uniform(size=100),
                          points=rng.normal(scale=500.0, size=(100, 2)),
                          source="oracle")
        again = parse_raceline_csv(write_raceline_csv(line))
        np.testing.assert_array_equal(line.w, again.w)
        np.testing.assert_array_equal(line.points, again.points)
        assert again.source == "oracle"

    def test_empty_line_raises(self):
        with pytest.raises(EmptyLine):
            RacingLine(w=np.array([]), points=np.empty((0, 2)))
        line = RacingLine(w=np.array([0.5]), points=np.array([[0.0, 0.0]]))
        with pytest.raises(EmptyLine):
            parse_raceline_csv("# only comments\n")

    def test_malformed_row(self):
        with pytest.raises(MalformedRow):
            parse_raceline_csv("0,1.0,2.0\n")
