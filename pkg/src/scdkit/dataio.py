"""File formats and text ingestion.

Formats:
  RTTM          ``SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>``
  change stamps one recording per line: ``<recording_id><TAB><t1>,<t2>,...``
  N-best        one JSON object per line with utterance_id, reference,
                hypotheses [{text, log_score}]
  reports       human table or stable-keyed JSON (lossless round trip)

Parsers reject malformed records with the offending position instead of
guessing.  Timestamps are decimal seconds with at most millisecond
resolution, preserved exactly.
"""

from __future__ import annotations

import io
import json
import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .metrics import (
    Annotation,
    ChangeHypothesis,
    PrecisionRecallReport,
    SegmentationReport,
    SpeakerSegment,
)
from .risk import LossBreakdown, NBest, ScoredHypothesis
from .tokens import SPEAKER_TURN, ST_TEXT, Token, TokenSeq, seq_to_text, word
from .trainer import TrainStep, TrainTrace

logger = logging.getLogger(__name__)

_SECONDS_RE = re.compile(r"^-?\d+(\.\d{1,3})?$")


class DataFormatError(Exception):
    """Malformed input; the message carries the file/line position."""


def parse_seconds(text: str, where: str) -> float:
    if not _SECONDS_RE.match(text):
        raise DataFormatError(
            f"{where}: {text!r} is not a decimal number of seconds "
            "(at most 3 fractional digits)")
    return float(text)


def format_seconds(value: float) -> str:
    """Millisecond-exact decimal text, at least two fractional digits."""
    s = f"{value:.3f}"
    return s[:-1] if s.endswith("0") else s


def _lines(stream: Union[str, io.TextIOBase, Iterable[str]]) -> Iterable[str]:
    if isinstance(stream, str):
        return stream.splitlines()
    return stream


# ---------------------------------------------------------------------------
# transcripts

def tokenize_transcript(text: str) -> TokenSeq:
    """Whitespace-split into tokens; the literal turn marker is matched
    before case folding, so a word that merely folds to it is an error."""
    out: List[Token] = []
    for raw in text.split():
        if raw == ST_TEXT:
            out.append(SPEAKER_TURN)
            continue
        folded = raw.casefold()
        if folded == ST_TEXT:
            raise DataFormatError(
                f"word {raw!r} case-folds to the reserved turn marker {ST_TEXT!r}")
        out.append(word(folded))
    return tuple(out)


# ---------------------------------------------------------------------------
# RTTM

@dataclass(frozen=True)
class RttmRecord:
    """One 10-field SPEAKER line; the four metadata slots serialize as <NA>."""

    file: str
    channel: int
    onset: float
    duration: float
    speaker: str

    @classmethod
    def from_line(cls, line: str, where: str) -> "RttmRecord":
        fields = line.split()
        if len(fields) != 10:
            raise DataFormatError(f"{where}: expected 10 fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            raise DataFormatError(f"{where}: expected a SPEAKER record, got {fields[0]!r}")
        try:
            channel = int(fields[2])
        except ValueError:
            raise DataFormatError(f"{where}: channel must be an integer, got {fields[2]!r}")
        onset = parse_seconds(fields[3], where)
        duration = parse_seconds(fields[4], where)
        if onset < 0:
            raise DataFormatError(f"{where}: negative onset {fields[3]}")
        if duration <= 0:
            raise DataFormatError(f"{where}: segment duration must be positive, got {fields[4]}")
        return cls(file=fields[1], channel=channel, onset=onset,
                   duration=duration, speaker=fields[7])

    def to_line(self) -> str:
        return (f"SPEAKER {self.file} {self.channel} {format_seconds(self.onset)} "
                f"{format_seconds(self.duration)} <NA> <NA> {self.speaker} <NA> <NA>")


def parse_rttm(stream: Union[str, io.TextIOBase, Iterable[str]],
               source: str = "<rttm>") -> List[Annotation]:
    """Parse SPEAKER records grouped by file id, in order of first appearance."""
    segments: Dict[str, List[SpeakerSegment]] = {}
    ignored = 0
    for lineno, line in enumerate(_lines(stream), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.split(None, 1)[0] != "SPEAKER":
            ignored += 1
            continue
        rec = RttmRecord.from_line(stripped, f"{source}:{lineno}")
        segments.setdefault(rec.file, []).append(
            SpeakerSegment(rec.speaker, rec.onset, round(rec.onset + rec.duration, 3)))
    if ignored:
        logger.warning("%s: ignored %d non-SPEAKER lines", source, ignored)
    if not segments:
        raise DataFormatError(f"{source}: no SPEAKER records found")
    return [Annotation(file_id, tuple(segs)) for file_id, segs in segments.items()]


def serialize_rttm(annotations: Sequence[Annotation]) -> str:
    lines = []
    for ann in annotations:
        for seg in ann.segments:
            rec = RttmRecord(file=ann.recording_id, channel=1, onset=seg.start,
                             duration=round(seg.end - seg.start, 3), speaker=seg.speaker)
            lines.append(rec.to_line())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# change stamps

def parse_change_stamps(stream: Union[str, io.TextIOBase, Iterable[str]],
                        source: str = "<stamps>") -> List[ChangeHypothesis]:
    out: List[ChangeHypothesis] = []
    seen = set()
    for lineno, line in enumerate(_lines(stream), start=1):
        stripped = line.rstrip("\n")
        if not stripped.strip():
            continue
        where = f"{source}:{lineno}"
        if "\t" not in stripped:
            raise DataFormatError(f"{where}: expected '<recording_id><TAB><t1>,<t2>,...'")
        rec_id, _, rest = stripped.partition("\t")
        rec_id = rec_id.strip()
        if not rec_id:
            raise DataFormatError(f"{where}: empty recording id")
        if rec_id in seen:
            raise DataFormatError(f"{where}: duplicate recording id {rec_id!r}")
        seen.add(rec_id)
        rest = rest.strip()
        stamps = tuple(parse_seconds(tok, where) for tok in rest.split(",") if tok) if rest else ()
        out.append(ChangeHypothesis(rec_id, stamps))
    if not out:
        raise DataFormatError(f"{source}: no records found")
    return out


def serialize_change_stamps(hypotheses: Sequence[ChangeHypothesis]) -> str:
    lines = []
    for hyp in hypotheses:
        stamps = ",".join(format_seconds(t) for t in hyp.timestamps)
        lines.append(f"{hyp.recording_id}\t{stamps}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# N-best lists

def parse_nbest(stream: Union[str, io.TextIOBase, Iterable[str]],
                source: str = "<nbest>") -> List[NBest]:
    out: List[NBest] = []
    for lineno, line in enumerate(_lines(stream), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        where = f"{source}:{lineno}"
        try:
            rec = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{where}: invalid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise DataFormatError(f"{where}: expected a JSON object")
        try:
            utt_id = rec["utterance_id"]
            reference = rec["reference"]
            hyp_list = rec["hypotheses"]
        except KeyError as exc:
            raise DataFormatError(f"{where}: missing field {exc}") from exc
        if not isinstance(utt_id, str) or not utt_id:
            raise DataFormatError(f"{where}: utterance_id must be a non-empty string")
        if not isinstance(reference, str):
            raise DataFormatError(f"{where}: reference must be a string")
        if not isinstance(hyp_list, list) or not hyp_list:
            raise DataFormatError(f"{where}: hypotheses must be a non-empty list")
        try:
            ref_tokens = tokenize_transcript(reference)
        except DataFormatError as exc:
            raise DataFormatError(f"{where}: {exc}") from exc
        hyps = []
        for h in hyp_list:
            if not isinstance(h, dict) or "text" not in h or "log_score" not in h:
                raise DataFormatError(f"{where}: each hypothesis needs text and log_score")
            score = h["log_score"]
            if not isinstance(score, (int, float)) or not math.isfinite(score):
                raise DataFormatError(f"{where}: log_score must be a finite number, got {score!r}")
            try:
                hyp_tokens = tokenize_transcript(h["text"])
            except DataFormatError as exc:
                raise DataFormatError(f"{where}: {exc}") from exc
            hyps.append(ScoredHypothesis(hyp_tokens, float(score)))
        try:
            out.append(NBest(utt_id, ref_tokens, tuple(hyps)))
        except ValueError as exc:
            raise DataFormatError(f"{where}: {exc}") from exc
    if not out:
        raise DataFormatError(f"{source}: no records found")
    return out


def serialize_nbest(records: Sequence[NBest]) -> str:
    lines = []
    for nb in records:
        obj = {
            "utterance_id": nb.utterance_id,
            "reference": seq_to_text(nb.reference),
            "hypotheses": [
                {"text": seq_to_text(h.tokens), "log_score": h.log_score}
                for h in nb.hypotheses
            ],
        }
        lines.append(json.dumps(obj, sort_keys=True))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# long-form segmentation

def segment_longform(annotation: Annotation, target: float) -> List[Tuple[float, float]]:
    """Split a recording into windows of whole segments around ``target`` seconds.

    Segments accumulate in start order; a window closes at the first
    segment boundary where the window span reaches the target, except that
    a window never closes while the next segment overlaps it (windows stay
    disjoint and never cut inside a segment).
    """
    if target <= 0:
        raise ValueError(f"target must be > 0, got {target}")
    segs = sorted(annotation.segments, key=lambda s: (s.start, s.end))
    windows: List[Tuple[float, float]] = []
    win_start: Optional[float] = None
    win_end = 0.0
    count = 0
    for idx, seg in enumerate(segs):
        if win_start is None:
            win_start, win_end, count = seg.start, seg.end, 1
        else:
            win_end = max(win_end, seg.end)
            count += 1
        if seg.end - seg.start > target and count == 1:
            logger.warning(
                "%s: segment [%s, %s] is longer than the %s s target; kept whole",
                annotation.recording_id, seg.start, seg.end, target)
        nxt = segs[idx + 1] if idx + 1 < len(segs) else None
        if win_end - win_start >= target and (nxt is None or nxt.start >= win_end):
            windows.append((win_start, win_end))
            win_start = None
    if win_start is not None:
        windows.append((win_start, win_end))
    return windows


# ---------------------------------------------------------------------------
# reports

TABLE = "table"
MACHINE = "machine"


def _pct(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{100.0 * value:.1f}"


def _table(rows: Sequence[Tuple[str, str]]) -> str:
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {val}" for name, val in rows) + "\n"


def _precision_recall_rows(r: PrecisionRecallReport) -> List[Tuple[str, str]]:
    return [
        ("precision", _pct(r.precision)),
        ("recall_count", _pct(r.recall_count)),
        ("recall_duration", _pct(r.recall_duration)),
        ("f1", _pct(r.f1)),
        ("predictions_kept", str(r.n_predictions_kept)),
        ("predictions_dropped", str(r.n_predictions_dropped)),
        ("correct", str(r.n_correct)),
        ("false_accepts", str(r.n_fa)),
        ("change_intervals", str(r.n_intervals)),
        ("hits", str(r.n_hit)),
        ("false_rejects", str(r.n_fr)),
        ("collar", format_seconds(r.collar)),
    ]


def _segmentation_rows(r: SegmentationReport) -> List[Tuple[str, str]]:
    return [
        ("purity", _pct(r.purity)),
        ("coverage", _pct(r.coverage)),
        ("f1", _pct(r.f1)),
    ]


def _loss_rows(r: LossBreakdown) -> List[Tuple[str, str]]:
    return [
        ("expected_risk", f"{r.expected_risk:.6g}"),
        ("nll_term", f"{r.nll_term:.6g}"),
        ("total", f"{r.total:.6g}"),
        ("expected_fa", f"{r.expected_fa:.6g}"),
        ("expected_fr", f"{r.expected_fr:.6g}"),
        ("expected_w", f"{r.expected_w:.6g}"),
    ]


def _report_dict(report) -> Dict:
    if isinstance(report, PrecisionRecallReport):
        return {
            "kind": "precision_recall",
            "precision": report.precision,
            "recall_count": report.recall_count,
            "recall_duration": report.recall_duration,
            "f1": report.f1,
            "n_predictions_kept": report.n_predictions_kept,
            "n_predictions_dropped": report.n_predictions_dropped,
            "n_correct": report.n_correct,
            "n_fa": report.n_fa,
            "n_intervals": report.n_intervals,
            "n_hit": report.n_hit,
            "n_fr": report.n_fr,
            "collar": report.collar,
            "hit_duration": report.hit_duration,
            "total_duration": report.total_duration,
        }
    if isinstance(report, SegmentationReport):
        return {
            "kind": "segmentation",
            "purity": report.purity,
            "coverage": report.coverage,
            "f1": report.f1,
            "purity_num": report.purity_num,
            "purity_den": report.purity_den,
            "coverage_num": report.coverage_num,
            "coverage_den": report.coverage_den,
        }
    if isinstance(report, LossBreakdown):
        return {
            "kind": "loss",
            "per_hyp_risk": list(report.per_hyp_risk),
            "per_hyp_prob": list(report.per_hyp_prob),
            "expected_risk": report.expected_risk,
            "nll_term": report.nll_term,
            "total": report.total,
            "expected_fa": report.expected_fa,
            "expected_fr": report.expected_fr,
            "expected_w": report.expected_w,
        }
    raise TypeError(f"unsupported report type: {type(report).__name__}")


def write_report(report, format: str = TABLE) -> str:
    """Render a report as a human table or lossless machine JSON."""
    if format == MACHINE:
        return json.dumps(_report_dict(report), sort_keys=True) + "\n"
    if format != TABLE:
        raise ValueError(f"unknown report format {format!r}")
    if isinstance(report, PrecisionRecallReport):
        return _table(_precision_recall_rows(report))
    if isinstance(report, SegmentationReport):
        return _table(_segmentation_rows(report))
    if isinstance(report, LossBreakdown):
        return _table(_loss_rows(report))
    raise TypeError(f"unsupported report type: {type(report).__name__}")


def read_report(text: str):
    """Inverse of ``write_report(..., format=MACHINE)``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid report JSON: {exc}") from exc
    kind = obj.get("kind")
    if kind == "precision_recall":
        return PrecisionRecallReport(
            precision=obj["precision"],
            recall_count=obj["recall_count"],
            recall_duration=obj["recall_duration"],
            f1=obj["f1"],
            n_predictions_kept=obj["n_predictions_kept"],
            n_predictions_dropped=obj["n_predictions_dropped"],
            n_correct=obj["n_correct"],
            n_fa=obj["n_fa"],
            n_intervals=obj["n_intervals"],
            n_hit=obj["n_hit"],
            n_fr=obj["n_fr"],
            collar=obj["collar"],
            hit_duration=obj["hit_duration"],
            total_duration=obj["total_duration"],
        )
    if kind == "segmentation":
        return SegmentationReport(
            purity=obj["purity"],
            coverage=obj["coverage"],
            f1=obj["f1"],
            purity_num=obj["purity_num"],
            purity_den=obj["purity_den"],
            coverage_num=obj["coverage_num"],
            coverage_den=obj["coverage_den"],
        )
    if kind == "loss":
        return LossBreakdown(
            per_hyp_risk=tuple(obj["per_hyp_risk"]),
            per_hyp_prob=tuple(obj["per_hyp_prob"]),
            expected_risk=obj["expected_risk"],
            nll_term=obj["nll_term"],
            total=obj["total"],
            expected_fa=obj["expected_fa"],
            expected_fr=obj["expected_fr"],
            expected_w=obj["expected_w"],
        )
    raise DataFormatError(f"unknown report kind {kind!r}")


# ---------------------------------------------------------------------------
# training traces

def write_trace(trace: TrainTrace) -> str:
    lines = []
    for step, rec in enumerate(trace.records):
        lines.append(json.dumps({
            "step": step,
            "loss_total": rec.loss_total,
            "expected_fa": rec.expected_fa,
            "expected_fr": rec.expected_fr,
            "expected_w": rec.expected_w,
            "argmax_candidate": rec.argmax_candidate,
        }, sort_keys=True))
    return "\n".join(lines) + "\n"


def read_trace_records(stream: Union[str, io.TextIOBase, Iterable[str]],
                       source: str = "<trace>") -> List[TrainStep]:
    records: List[TrainStep] = []
    for lineno, line in enumerate(_lines(stream), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
            records.append(TrainStep(
                loss_total=obj["loss_total"],
                expected_fa=obj["expected_fa"],
                expected_fr=obj["expected_fr"],
                expected_w=obj["expected_w"],
                argmax_candidate=obj["argmax_candidate"],
            ))
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataFormatError(f"{source}:{lineno}: bad trace record: {exc}") from exc
    return records
