"""Interval-based speaker-change metrics: precision/recall and purity/coverage.

Speaker changes are scored as time intervals, not points.  From the
reference speaker annotation we derive the mono-speaker ranges (time
covered by exactly one speaker) and treat their complement within the
annotated span as the change intervals: multi-speaker overlap, gaps, and
the zero-length instants where one speaker ends exactly as another
begins.  A prediction is correct when its collar-widened window touches
any change interval; a change interval is recalled when at least one
prediction matches it.

Purity and coverage score the mono-speaker side: each reference segment
is credited with its best-overlapping hypothesis segment (the span cut
at the predicted change points) and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .intervals import Interval, IntervalSet


@dataclass(frozen=True)
class SpeakerSegment:
    speaker: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.speaker:
            raise ValueError("speaker id must be non-empty")
        if self.start < 0:
            raise ValueError(f"segment start must be >= 0, got {self.start}")
        if self.end <= self.start:
            raise ValueError(
                f"segment [{self.start}, {self.end}] of {self.speaker!r} has no duration")


@dataclass(frozen=True)
class Annotation:
    recording_id: str
    segments: Tuple[SpeakerSegment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError(f"annotation {self.recording_id!r} has no segments")

    @property
    def t_min(self) -> float:
        return min(s.start for s in self.segments)

    @property
    def t_max(self) -> float:
        return max(s.end for s in self.segments)

    def speakers(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for s in self.segments:
            seen.setdefault(s.speaker, None)
        return tuple(seen)


@dataclass(frozen=True)
class ChangeHypothesis:
    recording_id: str
    timestamps: Tuple[float, ...]

    def __post_init__(self) -> None:
        stamps = tuple(sorted(set(self.timestamps)))
        object.__setattr__(self, "timestamps", stamps)


@dataclass(frozen=True)
class PrecisionRecallReport:
    precision: Optional[float]
    recall_count: Optional[float]
    recall_duration: Optional[float]
    f1: Optional[float]
    n_predictions_kept: int
    n_predictions_dropped: int
    n_correct: int
    n_fa: int
    n_intervals: int
    n_hit: int
    n_fr: int
    collar: float
    # raw duration sums, kept so corpus-level pooling can aggregate counts
    hit_duration: float = 0.0
    total_duration: float = 0.0


@dataclass(frozen=True)
class SegmentationReport:
    purity: float
    coverage: float
    f1: float
    # raw overlap sums for pooling
    purity_num: float = 0.0
    purity_den: float = 0.0
    coverage_num: float = 0.0
    coverage_den: float = 0.0


def f1_score(a: float, b: float) -> float:
    """Harmonic mean; 0 when both inputs are 0."""
    if a == 0.0 and b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def merge_speaker_gaps(annotation: Annotation, gap_merge: float) -> Annotation:
    """Merge same-speaker segments separated by at most ``gap_merge`` seconds.

    ``gap_merge`` <= 0 returns the annotation unchanged.
    """
    if gap_merge <= 0:
        return annotation
    by_speaker: Dict[str, List[SpeakerSegment]] = {}
    for seg in annotation.segments:
        by_speaker.setdefault(seg.speaker, []).append(seg)
    merged: List[SpeakerSegment] = []
    for speaker, segs in by_speaker.items():
        segs.sort(key=lambda s: (s.start, s.end))
        cur_start, cur_end = segs[0].start, segs[0].end
        for seg in segs[1:]:
            if seg.start - cur_end <= gap_merge:
                cur_end = max(cur_end, seg.end)
            else:
                merged.append(SpeakerSegment(speaker, cur_start, cur_end))
                cur_start, cur_end = seg.start, seg.end
        merged.append(SpeakerSegment(speaker, cur_start, cur_end))
    merged.sort(key=lambda s: (s.start, s.end, s.speaker))
    return Annotation(annotation.recording_id, tuple(merged))


def speaker_coverage(annotation: Annotation) -> Dict[str, IntervalSet]:
    """Each speaker's own segments unioned into a normalized interval set."""
    by_speaker: Dict[str, List[Interval]] = {}
    for seg in annotation.segments:
        by_speaker.setdefault(seg.speaker, []).append(Interval(seg.start, seg.end))
    return {spk: IntervalSet(ivs) for spk, ivs in by_speaker.items()}


def _coverage_pieces(annotation: Annotation) -> List[Tuple[float, float, int]]:
    """Elementary (start, end, n_speakers) pieces over [t_min, t_max].

    Pieces alternate between boundary points (zero length) and the open
    gaps between consecutive boundaries, in time order.  Within each piece
    the number of covering speakers is constant, and closed-interval
    endpoint coverage is accounted for by the point pieces.
    """
    coverage = speaker_coverage(annotation)
    bounds = sorted({b for ivs in coverage.values() for iv in ivs for b in (iv.start, iv.end)})
    pieces: List[Tuple[float, float, int]] = []

    def count_at_point(t: float) -> int:
        return sum(1 for ivs in coverage.values() if ivs.contains_point(t))

    def count_on_open(lo: float, hi: float) -> int:
        # elementary: a speaker either covers all of (lo, hi) or none of it
        return sum(
            1 for ivs in coverage.values()
            if any(iv.start <= lo and hi <= iv.end for iv in ivs))

    for idx, b in enumerate(bounds):
        pieces.append((b, b, count_at_point(b)))
        if idx + 1 < len(bounds):
            nxt = bounds[idx + 1]
            pieces.append((b, nxt, count_on_open(b, nxt)))
    return pieces


def _runs(pieces: Sequence[Tuple[float, float, int]], keep) -> IntervalSet:
    runs: List[Interval] = []
    run_start: Optional[float] = None
    run_end = 0.0
    for start, end, count in pieces:
        if keep(count):
            if run_start is None:
                run_start = start
            run_end = end
        elif run_start is not None:
            runs.append(Interval(run_start, run_end))
            run_start = None
    if run_start is not None:
        runs.append(Interval(run_start, run_end))
    return IntervalSet(runs)


def mono_speaker_ranges(annotation: Annotation) -> IntervalSet:
    """Time within the annotated span covered by exactly one speaker."""
    return _runs(_coverage_pieces(annotation), lambda c: c == 1)


def change_intervals(annotation: Annotation) -> IntervalSet:
    """Complement of the mono-speaker ranges within the annotated span.

    Includes multi-speaker overlap, unannotated gaps, and zero-length
    switching points where one speaker ends exactly as another begins.
    """
    return _runs(_coverage_pieces(annotation), lambda c: c != 1)


def _split_hypothesis(hypothesis: ChangeHypothesis, t_min: float, t_max: float):
    kept = [t for t in hypothesis.timestamps if t_min <= t <= t_max]
    dropped = len(hypothesis.timestamps) - len(kept)
    return kept, dropped


def score_changes(annotation: Annotation, hypothesis: ChangeHypothesis,
                  collar: float = 0.25, gap_merge: float = 0.0) -> PrecisionRecallReport:
    """Match predicted change points against the reference change intervals.

    Predictions outside the annotated span are dropped; a kept prediction
    is correct when its collar window intersects any change interval, and
    an interval is hit when at least one kept prediction matches it.
    """
    if annotation.recording_id != hypothesis.recording_id:
        raise ValueError(
            f"recording ids differ: {annotation.recording_id!r} vs {hypothesis.recording_id!r}")
    if collar < 0:
        raise ValueError(f"collar must be >= 0, got {collar}")
    ann = merge_speaker_gaps(annotation, gap_merge)
    intervals = change_intervals(ann)
    kept, dropped = _split_hypothesis(hypothesis, ann.t_min, ann.t_max)

    n_correct = 0
    hit = [False] * len(intervals)
    for t in kept:
        lo, hi = t - collar, t + collar
        matched = False
        for idx, iv in enumerate(intervals.intervals):
            if iv.intersects(lo, hi):
                hit[idx] = True
                matched = True
        if matched:
            n_correct += 1

    n_kept = len(kept)
    n_intervals = len(intervals)
    n_hit = sum(hit)
    total_dur = intervals.total_duration
    hit_dur = sum(iv.duration for iv, h in zip(intervals.intervals, hit) if h)

    precision = n_correct / n_kept if n_kept > 0 else None
    recall_count = n_hit / n_intervals if n_intervals > 0 else None
    recall_duration = hit_dur / total_dur if total_dur > 0 else None
    if precision is None or recall_count is None or (precision == 0 and recall_count == 0):
        f1 = None
    else:
        f1 = f1_score(precision, recall_count)
    return PrecisionRecallReport(
        precision=precision,
        recall_count=recall_count,
        recall_duration=recall_duration,
        f1=f1,
        n_predictions_kept=n_kept,
        n_predictions_dropped=dropped,
        n_correct=n_correct,
        n_fa=n_kept - n_correct,
        n_intervals=n_intervals,
        n_hit=n_hit,
        n_fr=n_intervals - n_hit,
        collar=collar,
        hit_duration=hit_dur,
        total_duration=total_dur,
    )


def reference_units(annotation: Annotation) -> List[Tuple[str, Interval]]:
    """Per-speaker contiguous coverage intervals, the units of coverage scoring."""
    units: List[Tuple[str, Interval]] = []
    for speaker, ivs in speaker_coverage(annotation).items():
        for iv in ivs:
            units.append((speaker, iv))
    units.sort(key=lambda u: (u[1].start, u[1].end, u[0]))
    return units


def hypothesis_segments(annotation: Annotation, hypothesis: ChangeHypothesis) -> List[Interval]:
    """The annotated span cut at the kept prediction timestamps."""
    t_min, t_max = annotation.t_min, annotation.t_max
    cuts = [t for t in hypothesis.timestamps if t_min < t < t_max]
    bounds = [t_min] + cuts + [t_max]
    return [Interval(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


def purity_coverage(annotation: Annotation, hypothesis: ChangeHypothesis,
                    gap_merge: float = 0.0) -> SegmentationReport:
    """Best-overlap segmentation scores between reference and hypothesis segments."""
    if annotation.recording_id != hypothesis.recording_id:
        raise ValueError(
            f"recording ids differ: {annotation.recording_id!r} vs {hypothesis.recording_id!r}")
    ann = merge_speaker_gaps(annotation, gap_merge)
    refs = reference_units(ann)
    hyps = hypothesis_segments(ann, hypothesis)

    cov_num = 0.0
    cov_den = 0.0
    for _, ref_iv in refs:
        cov_num += max(ref_iv.overlap(h) for h in hyps)
        cov_den += ref_iv.duration
    pur_num = 0.0
    pur_den = 0.0
    for h in hyps:
        pur_num += max(h.overlap(ref_iv) for _, ref_iv in refs)
        pur_den += h.duration

    coverage = cov_num / cov_den
    purity = pur_num / pur_den
    return SegmentationReport(
        purity=purity,
        coverage=coverage,
        f1=f1_score(purity, coverage),
        purity_num=pur_num,
        purity_den=pur_den,
        coverage_num=cov_num,
        coverage_den=cov_den,
    )


def pooled_precision_recall(reports: Sequence[PrecisionRecallReport]) -> PrecisionRecallReport:
    """Corpus-level report from summed raw counts (not averaged rates)."""
    if not reports:
        raise ValueError("nothing to pool")
    collars = {r.collar for r in reports}
    if len(collars) > 1:
        raise ValueError(f"cannot pool reports with different collars: {sorted(collars)}")
    n_kept = sum(r.n_predictions_kept for r in reports)
    n_dropped = sum(r.n_predictions_dropped for r in reports)
    n_correct = sum(r.n_correct for r in reports)
    n_intervals = sum(r.n_intervals for r in reports)
    n_hit = sum(r.n_hit for r in reports)
    hit_dur = sum(r.hit_duration for r in reports)
    total_dur = sum(r.total_duration for r in reports)

    precision = n_correct / n_kept if n_kept > 0 else None
    recall_count = n_hit / n_intervals if n_intervals > 0 else None
    recall_duration = hit_dur / total_dur if total_dur > 0 else None
    if precision is None or recall_count is None or (precision == 0 and recall_count == 0):
        f1 = None
    else:
        f1 = f1_score(precision, recall_count)
    return PrecisionRecallReport(
        precision=precision,
        recall_count=recall_count,
        recall_duration=recall_duration,
        f1=f1,
        n_predictions_kept=n_kept,
        n_predictions_dropped=n_dropped,
        n_correct=n_correct,
        n_fa=n_kept - n_correct,
        n_intervals=n_intervals,
        n_hit=n_hit,
        n_fr=n_intervals - n_hit,
        collar=reports[0].collar,
        hit_duration=hit_dur,
        total_duration=total_dur,
    )


def pooled_segmentation(reports: Sequence[SegmentationReport]) -> SegmentationReport:
    """Corpus-level purity/coverage from summed overlap durations."""
    if not reports:
        raise ValueError("nothing to pool")
    pur_num = sum(r.purity_num for r in reports)
    pur_den = sum(r.purity_den for r in reports)
    cov_num = sum(r.coverage_num for r in reports)
    cov_den = sum(r.coverage_den for r in reports)
    purity = pur_num / pur_den if pur_den > 0 else 0.0
    coverage = cov_num / cov_den if cov_den > 0 else 0.0
    return SegmentationReport(
        purity=purity,
        coverage=coverage,
        f1=f1_score(purity, coverage),
        purity_num=pur_num,
        purity_den=pur_den,
        coverage_num=cov_num,
        coverage_den=cov_den,
    )
