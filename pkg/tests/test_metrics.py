import random

import pytest

from _scenarios import random_annotation, random_hypothesis, random_partition_annotation
from scdkit.intervals import Interval, IntervalSet
from scdkit.metrics import (
    Annotation,
    ChangeHypothesis,
    SpeakerSegment,
    change_intervals,
    f1_score,
    hypothesis_segments,
    merge_speaker_gaps,
    mono_speaker_ranges,
    pooled_precision_recall,
    pooled_segmentation,
    purity_coverage,
    score_changes,
)


def ann(rec_id, *segs):
    return Annotation(rec_id, tuple(SpeakerSegment(s, a, b) for s, a, b in segs))


FIG1 = ann("fig1", ("A", 0.0, 10.0), ("B", 10.5, 20.0), ("C", 19.0, 25.0))


class TestIntervalSet:
    def test_merges_overlap_and_touch(self):
        s = IntervalSet([(0.0, 2.0), (2.0, 3.0), (2.5, 4.0), (6.0, 7.0)])
        assert s.intervals == (Interval(0.0, 4.0), Interval(6.0, 7.0))

    def test_absorbs_inner_point_keeps_lone_point(self):
        s = IntervalSet([(0.0, 4.0), (2.0, 2.0), (9.0, 9.0)])
        assert s.intervals == (Interval(0.0, 4.0), Interval(9.0, 9.0))

    def test_zero_length_intersection_counts(self):
        s = IntervalSet([(10.0, 10.0)])
        assert s.intersects(9.75, 10.0)
        assert not s.intersects(9.0, 9.99)

    def test_rejects_backwards_interval(self):
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)


class TestMonoSpeakerRanges:
    def test_three_speaker_layout(self):
        u = mono_speaker_ranges(FIG1)
        assert u == IntervalSet([(0.0, 10.0), (10.5, 19.0), (20.0, 25.0)])

    def test_single_speaker(self):
        u = mono_speaker_ranges(ann("r", ("A", 0.0, 5.0)))
        assert u == IntervalSet([(0.0, 5.0)])

    def test_full_overlap_has_no_mono_time(self):
        u = mono_speaker_ranges(ann("r", ("A", 0.0, 5.0), ("B", 0.0, 5.0)))
        assert len(u) == 0

    def test_same_speaker_overlap_is_mono(self):
        u = mono_speaker_ranges(ann("r", ("A", 0.0, 5.0), ("A", 3.0, 8.0)))
        assert u == IntervalSet([(0.0, 8.0)])


class TestChangeIntervals:
    def test_three_speaker_layout(self):
        ubar = change_intervals(FIG1)
        assert ubar == IntervalSet([(10.0, 10.5), (19.0, 20.0)])

    def test_exact_switch_is_zero_length_point(self):
        ubar = change_intervals(ann("r", ("A", 0.0, 10.0), ("B", 10.0, 20.0)))
        assert ubar == IntervalSet([(10.0, 10.0)])

    def test_single_speaker_empty(self):
        assert len(change_intervals(ann("r", ("A", 0.0, 5.0)))) == 0

    def test_same_speaker_gap_is_a_change_interval(self):
        ubar = change_intervals(ann("r", ("A", 0.0, 5.0), ("A", 6.0, 10.0)))
        assert ubar == IntervalSet([(5.0, 6.0)])

    def test_gap_merge_removes_small_same_speaker_gap(self):
        a = ann("r", ("A", 0.0, 5.0), ("A", 6.0, 10.0))
        merged = merge_speaker_gaps(a, 1.0)
        assert len(change_intervals(merged)) == 0
        untouched = merge_speaker_gaps(a, 0.0)
        assert untouched == a

    @pytest.mark.parametrize("seed", range(30))
    def test_complementarity(self, seed):
        rng = random.Random(seed)
        a = random_annotation(rng)
        u = mono_speaker_ranges(a)
        ubar = change_intervals(a)
        merged = IntervalSet(list(u) + list(ubar))
        assert merged == IntervalSet([(a.t_min, a.t_max)])
        cross = sum(x.overlap(y) for x in u for y in ubar)
        assert cross == 0.0


class TestScoreChanges:
    def test_fig1_layout(self):
        hyp = ChangeHypothesis("fig1", (10.2, 15.0, 19.5))
        r = score_changes(FIG1, hyp, collar=0.25)
        assert r.precision == 2 / 3
        assert r.recall_count == 1.0
        assert r.n_fa == 1
        assert r.n_correct == 2
        assert r.n_intervals == 2
        assert r.n_fr == 0

    def test_collar_reaches_interval(self):
        hyp = ChangeHypothesis("fig1", (9.8,))
        r = score_changes(FIG1, hyp, collar=0.25)
        assert r.n_correct == 1  # [9.55, 10.05] touches [10, 10.5]
        r0 = score_changes(FIG1, hyp, collar=0.0)
        assert r0.n_correct == 0

    def test_perfect_predictor(self):
        hyp = ChangeHypothesis("fig1", (10.25, 19.5))
        r = score_changes(FIG1, hyp, collar=0.25)
        assert r.precision == 1.0
        assert r.recall_count == 1.0
        assert r.recall_duration == 1.0
        assert r.f1 == 1.0

    def test_empty_predictor(self):
        r = score_changes(FIG1, ChangeHypothesis("fig1", ()), collar=0.25)
        assert r.precision is None
        assert r.recall_count == 0.0
        assert r.f1 is None

    def test_predictions_outside_span_dropped(self):
        hyp = ChangeHypothesis("fig1", (-1.0, 0.0, 25.0, 26.0))
        r = score_changes(FIG1, hyp, collar=0.25)
        # boundary points are kept, strictly-outside ones are dropped
        assert r.n_predictions_kept == 2
        assert r.n_predictions_dropped == 2

    def test_two_predictions_in_one_interval_both_correct(self):
        hyp = ChangeHypothesis("fig1", (19.2, 19.8))
        r = score_changes(FIG1, hyp, collar=0.0)
        assert r.n_correct == 2
        assert r.n_hit == 1

    def test_mismatched_ids_rejected(self):
        with pytest.raises(ValueError):
            score_changes(FIG1, ChangeHypothesis("other", (1.0,)))

    def test_zero_length_interval_matchable_with_zero_duration_weight(self):
        a = ann("r", ("A", 0.0, 10.0), ("B", 10.0, 20.0))
        r = score_changes(a, ChangeHypothesis("r", (10.1,)), collar=0.25)
        assert r.n_correct == 1
        assert r.recall_count == 1.0
        assert r.recall_duration is None  # the only interval has zero duration

    @pytest.mark.parametrize("seed", range(25))
    def test_collar_monotonicity(self, seed):
        rng = random.Random(1000 + seed)
        a = random_annotation(rng)
        h = random_hypothesis(rng)
        last_p, last_r = None, None
        for collar in (0.0, 0.1, 0.25, 0.5, 1.0):
            r = score_changes(a, h, collar=collar)
            if r.precision is not None and last_p is not None:
                assert r.precision >= last_p
            if r.recall_count is not None and last_r is not None:
                assert r.recall_count >= last_r
            last_p, last_r = r.precision, r.recall_count


def brute_purity_coverage(segments, timestamps):
    """Independent double-loop recomputation straight from the definitions."""
    t_min = min(s for _, s, _ in segments)
    t_max = max(e for _, _, e in segments)
    by_spk = {}
    for spk, s, e in segments:
        by_spk.setdefault(spk, []).append((s, e))
    ref_units = []
    for ivs in by_spk.values():
        ivs.sort()
        cs, ce = ivs[0]
        for s, e in ivs[1:]:
            if s <= ce:
                ce = max(ce, e)
            else:
                ref_units.append((cs, ce))
                cs, ce = s, e
        ref_units.append((cs, ce))
    cuts = sorted({t for t in timestamps if t_min < t < t_max})
    bounds = [t_min] + cuts + [t_max]
    hyp = list(zip(bounds, bounds[1:]))

    def ov(a, b):
        return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))

    cov = sum(max(ov(r, h) for h in hyp) for r in ref_units) / sum(e - s for s, e in ref_units)
    pur = sum(max(ov(h, r) for r in ref_units) for h in hyp) / sum(e - s for s, e in hyp)
    return pur, cov


class TestPurityCoverage:
    def test_mid_cut(self):
        a = ann("r", ("A", 0.0, 10.0), ("B", 10.0, 20.0))
        r = purity_coverage(a, ChangeHypothesis("r", (15.0,)))
        assert r.coverage == pytest.approx(0.75, abs=1e-9)
        assert r.purity == pytest.approx(0.75, abs=1e-9)

    def test_single_speaker_no_predictions(self):
        a = ann("r", ("A", 0.0, 5.0))
        r = purity_coverage(a, ChangeHypothesis("r", ()))
        assert r.purity == 1.0
        assert r.coverage == 1.0
        assert r.f1 == 1.0

    def test_exact_boundary_cut(self):
        a = ann("r", ("A", 0.0, 10.0), ("B", 10.0, 20.0))
        r = purity_coverage(a, ChangeHypothesis("r", (10.0,)))
        assert r.coverage == 1.0
        assert r.purity == 1.0

    def test_cut_at_span_edges_is_ignored(self):
        a = ann("r", ("A", 0.0, 10.0))
        segs = hypothesis_segments(a, ChangeHypothesis("r", (0.0, 10.0)))
        assert segs == [Interval(0.0, 10.0)]

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_brute_force(self, seed):
        rng = random.Random(2000 + seed)
        a = random_annotation(rng)
        h = random_hypothesis(rng)
        r = purity_coverage(a, h)
        pur, cov = brute_purity_coverage(
            [(s.speaker, s.start, s.end) for s in a.segments], h.timestamps)
        assert r.purity == pytest.approx(pur, abs=1e-9)
        assert r.coverage == pytest.approx(cov, abs=1e-9)

    @pytest.mark.parametrize("seed", range(25))
    def test_duality_swaps_scores(self, seed):
        rng = random.Random(3000 + seed)
        a = random_partition_annotation(rng)
        h = random_hypothesis(rng)
        direct = purity_coverage(a, h)
        # rebuild: hypothesis segments become anonymous speakers, the
        # annotation's interior boundaries become the predictions
        hyp_segs = hypothesis_segments(a, h)
        dual_ann = Annotation(a.recording_id, tuple(
            SpeakerSegment(f"h{i}", iv.start, iv.end) for i, iv in enumerate(hyp_segs)))
        interior = tuple(s.end for s in a.segments[:-1])
        dual_hyp = ChangeHypothesis(a.recording_id, interior)
        swapped = purity_coverage(dual_ann, dual_hyp)
        assert swapped.coverage == direct.purity
        assert swapped.purity == direct.coverage


class TestF1:
    def test_exact_values(self):
        assert f1_score(1.0, 1.0) == 1.0
        assert f1_score(0.5, 0.5) == 0.5
        assert f1_score(0.0, 0.0) == 0.0

    def test_reported_rounding_spot_checks(self):
        assert f"{100 * f1_score(0.781, 0.558):.1f}" == "65.1"
        assert f"{100 * f1_score(0.776, 0.652):.1f}" == "70.9"


class TestPooling:
    def test_pooled_rates_from_summed_counts(self):
        a1 = FIG1
        h1 = ChangeHypothesis("fig1", (10.2, 15.0, 19.5))
        a2 = ann("rec2", ("A", 0.0, 4.0), ("B", 4.5, 9.0))
        h2 = ChangeHypothesis("rec2", ())
        r1 = score_changes(a1, h1, collar=0.25)
        r2 = score_changes(a2, h2, collar=0.25)
        pooled = pooled_precision_recall([r1, r2])
        assert pooled.n_predictions_kept == 3
        assert pooled.precision == 2 / 3
        assert pooled.n_intervals == 3
        assert pooled.recall_count == 2 / 3

    def test_pooled_rejects_mixed_collars(self):
        h = ChangeHypothesis("fig1", (10.2,))
        with pytest.raises(ValueError):
            pooled_precision_recall([
                score_changes(FIG1, h, collar=0.25),
                score_changes(FIG1, h, collar=0.5),
            ])

    def test_pooled_segmentation_sums_durations(self):
        a1 = ann("r1", ("A", 0.0, 10.0), ("B", 10.0, 20.0))
        a2 = ann("r2", ("A", 0.0, 10.0))
        s1 = purity_coverage(a1, ChangeHypothesis("r1", (15.0,)))
        s2 = purity_coverage(a2, ChangeHypothesis("r2", ()))
        pooled = pooled_segmentation([s1, s2])
        # coverage: (10 + 5 + 10) / 30, purity identical here
        assert pooled.coverage == pytest.approx(25 / 30, abs=1e-12)
        assert pooled.purity == pytest.approx(25 / 30, abs=1e-12)


class TestValidation:
    def test_zero_length_segment_rejected(self):
        with pytest.raises(ValueError):
            SpeakerSegment("A", 5.0, 5.0)

    def test_empty_annotation_rejected(self):
        with pytest.raises(ValueError):
            Annotation("r", ())

    def test_hypothesis_sorts_and_dedups(self):
        h = ChangeHypothesis("r", (3.0, 1.0, 3.0, 2.0))
        assert h.timestamps == (1.0, 2.0, 3.0)
