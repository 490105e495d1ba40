import io

import pytest

from pdcalib.cohorts import (BinningMap, CohortError, CohortSnapshot, GradeCount, RatingScale,
                             apply_binning, observed_default_rates, parse_cohort_csv,
                             write_cohort_csv)

HEADER = "period,grade_order,grade_label,performing_start,defaults_end\n"


def make_snapshot(period, rows):
    return CohortSnapshot(period, tuple(GradeCount(o, lbl, n, d) for o, lbl, n, d in rows))


class TestParse:
    def test_fixture_periods_and_totals(self, snapshots):
        assert [s.period for s in snapshots] == ["2016", "2017"]
        s16, s17 = snapshots
        assert (s16.total_performing, s16.total_defaults) == (5968, 124)
        assert (s17.total_performing, s17.total_defaults) == (7773, 51)

    def test_fixture_rows(self, snapshot_2016, snapshot_2017):
        bb = next(g for g in snapshot_2016.grades if g.label == "BB")
        assert (bb.order, bb.performing_start, bb.defaults_end) == (5, 1470, 60)
        cc = next(g for g in snapshot_2017.grades if g.label == "CC")
        assert (cc.order, cc.performing_start, cc.defaults_end) == (8, 28, 4)

    def test_single_row(self):
        snaps = parse_cohort_csv(io.StringIO(HEADER + "2016,5,BB,1470,60\n2016,6,B,1225,25\n"))
        assert snaps[0].grades[0] == GradeCount(5, "BB", 1470, 60)

    def test_defaults_exceed_performing(self):
        with pytest.raises(CohortError, match=r"line 2: .*defaults exceed performing"):
            parse_cohort_csv(io.StringIO(HEADER + "2016,5,BB,10,11\n"))

    def test_malformed_row_reports_line(self):
        with pytest.raises(CohortError, match="line 3"):
            parse_cohort_csv(io.StringIO(HEADER + "2016,1,AAA,14,0\n2016,2,AA,x,0\n"))

    def test_duplicate_pair(self):
        with pytest.raises(CohortError, match="duplicate"):
            parse_cohort_csv(io.StringIO(HEADER + "2016,1,AAA,14,0\n2016,1,AAA,14,0\n"))

    def test_unknown_grade_against_scale(self):
        scale = RatingScale(("AAA", "AA"))
        with pytest.raises(CohortError, match="unknown grade"):
            parse_cohort_csv(io.StringIO(HEADER + "2016,1,AAA,14,0\n2016,2,ZZ,10,0\n"),
                             scale=scale)

    def test_default_bucket_accepted_but_excluded(self):
        snaps = parse_cohort_csv(io.StringIO(
            HEADER + "2016,1,AAA,14,0\n2016,2,AA,153,0\n2016,9,C/D,40,40\n"))
        assert snaps[0].labels == ("AAA", "AA")

    def test_bad_header(self):
        with pytest.raises(CohortError, match="expected header"):
            parse_cohort_csv(io.StringIO("a,b,c\n1,2,3\n"))

    def test_round_trip(self, snapshots):
        buf = io.StringIO()
        write_cohort_csv(snapshots, buf)
        again = parse_cohort_csv(io.StringIO(buf.getvalue()))
        assert again == snapshots


class TestRatingScale:
    def test_needs_two_grades(self):
        with pytest.raises(ValueError):
            RatingScale(("AAA",))

    def test_bucket_not_a_grade(self):
        with pytest.raises(ValueError):
            RatingScale(("AAA", "C/D"), default_bucket_label="C/D")

    def test_from_snapshot(self, snapshot_2016):
        scale = snapshot_2016.scale()
        assert scale.grades == snapshot_2016.labels
        assert scale.default_bucket_label == "C/D"


class TestBinning:
    def test_notch_merge(self):
        snap = make_snapshot("t", [(1, "BBB+", 100, 1), (2, "BBB", 200, 2), (3, "BBB-", 300, 3),
                                   (4, "BB", 50, 5)])
        merged = apply_binning(snap, BinningMap({"BBB+": "BBB", "BBB": "BBB", "BBB-": "BBB",
                                                 "BB": "BB"}))
        assert merged.grades[0] == GradeCount(1, "BBB", 600, 6)
        assert merged.grades[1] == GradeCount(2, "BB", 50, 5)

    def test_identity_map(self, snapshot_2016):
        identity = BinningMap({lbl: lbl for lbl in snapshot_2016.labels})
        merged = apply_binning(snapshot_2016, identity)
        assert merged.labels == snapshot_2016.labels
        assert [(g.performing_start, g.defaults_end) for g in merged.grades] == \
               [(g.performing_start, g.defaults_end) for g in snapshot_2016.grades]

    def test_full_scale_merge_matches_fixture(self, snapshot_2016):
        # a 22-notch scale whose merged totals must reproduce the fixture rows
        raw_rows = [
            (1, "AAA", 14, 0),
            (2, "AA+", 20, 0), (3, "AA", 83, 0), (4, "AA-", 50, 0),
            (5, "A+", 300, 0), (6, "A", 334, 0), (7, "A-", 300, 0),
            (8, "BBB+", 600, 0), (9, "BBB", 614, 0), (10, "BBB-", 600, 0),
            (11, "BB+", 470, 18), (12, "BB", 500, 22), (13, "BB-", 500, 20),
            (14, "B+", 400, 8), (15, "B", 425, 9), (16, "B-", 400, 8),
            (17, "CCC+", 110, 12), (18, "CCC", 109, 14), (19, "CCC-", 110, 12),
            (20, "CC", 29, 1),
        ]
        groups = {"AAA": "AAA", "AA+": "AA", "AA": "AA", "AA-": "AA",
                  "A+": "A", "A": "A", "A-": "A",
                  "BBB+": "BBB", "BBB": "BBB", "BBB-": "BBB",
                  "BB+": "BB", "BB": "BB", "BB-": "BB",
                  "B+": "B", "B": "B", "B-": "B",
                  "CCC+": "CCC", "CCC": "CCC", "CCC-": "CCC", "CC": "CC"}
        merged = apply_binning(make_snapshot("2016", raw_rows), BinningMap(groups))
        assert merged.grades == snapshot_2016.grades

    def test_conserves_totals(self):
        snap = make_snapshot("t", [(i, f"g{i}", 100 * i, i) for i in range(1, 9)])
        merged = apply_binning(snap, BinningMap({f"g{i}": f"m{(i - 1) // 3}" for i in range(1, 9)}))
        assert merged.total_performing == snap.total_performing
        assert merged.total_defaults == snap.total_defaults

    def test_uncovered_grade(self):
        snap = make_snapshot("t", [(1, "A", 10, 0), (2, "B", 10, 0)])
        with pytest.raises(CohortError, match="uncovered grade"):
            apply_binning(snap, BinningMap({"A": "A"}))

    def test_interleaved_groups_rejected(self):
        snap = make_snapshot("t", [(1, "A", 10, 0), (2, "B", 10, 0), (3, "C", 10, 0)])
        with pytest.raises(CohortError, match="interleaves"):
            apply_binning(snap, BinningMap({"A": "x", "B": "y", "C": "x"}))


class TestObservedRates:
    def test_fixture_rates(self, snapshot_2016, snapshot_2017):
        rates16 = {r.label: r for r in observed_default_rates(snapshot_2016)}
        assert rates16["BB"].rate == pytest.approx(60 / 1470)
        assert round(100 * rates16["BB"].rate, 1) == 4.1
        rates17 = {r.label: r for r in observed_default_rates(snapshot_2017)}
        assert rates17["CC"].rate == pytest.approx(4 / 28)
        assert round(100 * rates17["CC"].rate, 1) == 14.3

    def test_empty_cohort_flagged(self):
        snap = make_snapshot("t", [(1, "A", 0, 0), (2, "B", 10, 1)])
        rates = observed_default_rates(snap)
        assert rates[0].rate == 0.0 and not rates[0].has_sample
        assert rates[1].has_sample

    def test_rates_in_unit_interval(self, snapshots):
        for snap in snapshots:
            for r in observed_default_rates(snap):
                assert 0.0 <= r.rate <= 1.0


class TestValidation:
    def test_negative_counts(self):
        with pytest.raises(ValueError):
            GradeCount(1, "A", -1, 0)

    def test_snapshot_order_enforced(self):
        with pytest.raises(ValueError, match="increasing"):
            make_snapshot("t", [(2, "B", 10, 0), (1, "A", 10, 0)])
