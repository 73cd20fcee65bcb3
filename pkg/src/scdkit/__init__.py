"""Speaker-change-detection training loss and interval-based evaluation metrics."""

from .tokens import SPEAKER_TURN, ST_TEXT, Token, word
from .alignment import (
    Alignment,
    AlignmentCosts,
    BruteForceResult,
    EditOp,
    ErrorCounts,
    OpKind,
    align,
    brute_force_align,
)
from .risk import (
    LossBreakdown,
    NBest,
    RiskConfig,
    RiskKind,
    ScoredHypothesis,
    batch_loss,
    expected_risk,
    per_hyp_risk,
    risk_gradient,
)
from .trainer import (
    HypothesisSpace,
    ToyModel,
    TrainConfig,
    TrainStep,
    TrainTrace,
    enumerate_candidates,
    st_vs_word_space,
    train,
)
from .intervals import Interval, IntervalSet
from .metrics import (
    Annotation,
    ChangeHypothesis,
    PrecisionRecallReport,
    SegmentationReport,
    SpeakerSegment,
    change_intervals,
    f1_score,
    mono_speaker_ranges,
    pooled_precision_recall,
    pooled_segmentation,
    purity_coverage,
    score_changes,
)
from .dataio import (
    DataFormatError,
    RttmRecord,
    parse_change_stamps,
    parse_nbest,
    parse_rttm,
    read_report,
    segment_longform,
    serialize_change_stamps,
    serialize_nbest,
    serialize_rttm,
    tokenize_transcript,
    write_report,
    write_trace,
)

__all__ = [
    "SPEAKER_TURN",
    "ST_TEXT",
    "Token",
    "word",
    "Alignment",
    "AlignmentCosts",
    "BruteForceResult",
    "EditOp",
    "ErrorCounts",
    "OpKind",
    "align",
    "brute_force_align",
    "LossBreakdown",
    "NBest",
    "RiskConfig",
    "RiskKind",
    "ScoredHypothesis",
    "batch_loss",
    "expected_risk",
    "per_hyp_risk",
    "risk_gradient",
    "HypothesisSpace",
    "ToyModel",
    "TrainConfig",
    "TrainStep",
    "TrainTrace",
    "enumerate_candidates",
    "st_vs_word_space",
    "train",
    "Interval",
    "IntervalSet",
    "Annotation",
    "ChangeHypothesis",
    "PrecisionRecallReport",
    "SegmentationReport",
    "SpeakerSegment",
    "change_intervals",
    "f1_score",
    "mono_speaker_ranges",
    "pooled_precision_recall",
    "pooled_segmentation",
    "purity_coverage",
    "score_changes",
    "DataFormatError",
    "RttmRecord",
    "parse_change_stamps",
    "parse_nbest",
    "parse_rttm",
    "read_report",
    "segment_longform",
    "serialize_change_stamps",
    "serialize_nbest",
    "serialize_rttm",
    "tokenize_transcript",
    "write_report",
    "write_trace",
]

__version__ = "0.1.0"
