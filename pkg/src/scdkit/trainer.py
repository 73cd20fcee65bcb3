"""Desk-scale optimizer demonstrating the turn-weighted risk loss.

The "model" is a logit vector over an enumerated candidate space per
utterance.  Each step forms an N-best list from the top-scoring
candidates, evaluates the expected-risk loss plus the NLL regularizer,
and takes a plain gradient-descent step on the logits.  With heavy
false-accept/false-reject weights the probability mass moves away from
candidates that confuse the turn marker even when they make fewer word
errors, which is the effect the loss exists to produce.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .risk import RiskConfig, hyp_error_counts, risk_from_counts
from .tokens import SPEAKER_TURN, Token, TokenSeq, as_token_seq, word

CANDIDATE_CAP = 256


@dataclass(frozen=True)
class HypothesisSpace:
    """Enumerated stand-in for a beam-search output space."""

    utterance_id: str
    reference: TokenSeq
    candidates: Tuple[TokenSeq, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "reference", as_token_seq(self.reference))
        object.__setattr__(self, "candidates", tuple(tuple(c) for c in self.candidates))
        if len(self.candidates) < 2:
            raise ValueError("need at least two candidates")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidates must be distinct")
        if self.reference not in self.candidates:
            raise ValueError("reference must be one of the candidates")

    @property
    def reference_index(self) -> int:
        return self.candidates.index(self.reference)


@dataclass(frozen=True)
class ToyModel:
    logits: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.logits):
            raise ValueError("logits must be finite")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    steps: int = 500
    nbest_n: Optional[int] = None  # None selects the full candidate set
    nll_weight: float = 0.03
    risk: RiskConfig = field(default_factory=RiskConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.nbest_n is not None and self.nbest_n < 1:
            raise ValueError(f"nbest_n must be >= 1 or None, got {self.nbest_n}")
        if self.nll_weight < 0:
            raise ValueError(f"nll_weight must be >= 0, got {self.nll_weight}")


@dataclass(frozen=True)
class TrainStep:
    loss_total: float
    expected_fa: float
    expected_fr: float
    expected_w: float
    argmax_candidate: int


@dataclass(frozen=True)
class TrainTrace:
    records: Tuple[TrainStep, ...]  # steps + 1 entries, initial state first
    final_model: ToyModel

    @property
    def initial(self) -> TrainStep:
        return self.records[0]

    @property
    def final(self) -> TrainStep:
        return self.records[-1]


def _token_sort_key(t: Token):
    return (0, "") if t.is_turn else (1, t.text)


def _seq_sort_key(seq: TokenSeq):
    return (len(seq), tuple(_token_sort_key(t) for t in seq))


def _single_edits(seq: TokenSeq, vocab: Sequence[str]):
    """All sequences one token edit away: turn ins/del, word sub/ins/del."""
    out = set()
    for pos in range(len(seq) + 1):
        out.add(seq[:pos] + (SPEAKER_TURN,) + seq[pos:])
        for w in vocab:
            out.add(seq[:pos] + (word(w),) + seq[pos:])
    for pos, tok in enumerate(seq):
        out.add(seq[:pos] + seq[pos + 1:])
        if not tok.is_turn:
            for w in vocab:
                if w != tok.text:
                    out.add(seq[:pos] + (word(w),) + seq[pos + 1:])
    return out


def enumerate_candidates(reference: Sequence[Token], edit_budget: int,
                         vocab: Sequence[str], seed: int,
                         utterance_id: str = "toy") -> HypothesisSpace:
    """Candidate space of everything within ``edit_budget`` single-token edits.

    Deterministic for a given seed; capped at 256 candidates by seeded
    uniform downsampling that never drops the reference.
    """
    if not 1 <= edit_budget <= 3:
        raise ValueError(f"edit_budget must be in [1, 3], got {edit_budget}")
    if not vocab:
        raise ValueError("vocab must be non-empty")
    ref = as_token_seq(reference)
    seen = {ref}
    frontier = [ref]
    for _ in range(edit_budget):
        nxt = []
        for seq in frontier:
            for edited in _single_edits(seq, vocab):
                if edited not in seen:
                    seen.add(edited)
                    nxt.append(edited)
        frontier = nxt
    candidates = sorted(seen, key=_seq_sort_key)
    if len(candidates) > CANDIDATE_CAP:
        rng = random.Random(seed)
        others = [c for c in candidates if c != ref]
        kept = rng.sample(others, CANDIDATE_CAP - 1)
        candidates = sorted(kept + [ref], key=_seq_sort_key)
    return HypothesisSpace(utterance_id=utterance_id, reference=ref,
                           candidates=tuple(candidates))


def st_vs_word_space() -> HypothesisSpace:
    """Bundled scenario: a word-substitution error competes with a dropped turn.

    Candidate 0 is the reference, candidate 1 differs by one word, and
    candidate 2 drops the turn marker entirely (fewer word errors, one
    turn error).
    """
    ref = (word("a"), word("b"), SPEAKER_TURN, word("c"))
    word_sub = (word("a"), word("x"), SPEAKER_TURN, word("c"))
    turn_dropped = (word("a"), word("b"), word("c"))
    return HypothesisSpace(utterance_id="st-vs-word", reference=ref,
                           candidates=(ref, word_sub, turn_dropped))


def _top_n_indices(logits: np.ndarray, n: Optional[int]) -> np.ndarray:
    order = np.argsort(-logits, kind="stable")
    if n is None or n >= logits.size:
        return order
    return order[:n]


def train(space: HypothesisSpace, config: TrainConfig = TrainConfig()) -> TrainTrace:
    """Gradient-descent on zero-initialized logits; returns the full trace.

    Probabilities are the softmax over the whole candidate set; the risk
    term sums over the current top-``nbest_n`` candidates only.
    """
    cands = space.candidates
    n_cand = len(cands)
    ref_idx = space.reference_index
    q = len(space.reference)

    counts = [hyp_error_counts(space.reference, c, config.risk) for c in cands]
    risks = np.array([risk_from_counts(c, q, config.risk) for c in counts])
    fa = np.array([c.st_insertions for c in counts], dtype=float)
    fr = np.array([c.st_deletions for c in counts], dtype=float)
    w = np.array([c.word_errors for c in counts], dtype=float)

    logits = np.zeros(n_cand)
    records: List[TrainStep] = []
    for step in range(config.steps + 1):
        shifted = logits - logits.max()
        exp = np.exp(shifted)
        probs = exp / exp.sum()
        sel = _top_n_indices(logits, config.nbest_n)
        sel_mask = np.zeros(n_cand)
        sel_mask[sel] = 1.0
        p_sel = probs * sel_mask
        risk_term = float(np.dot(p_sel, risks))
        nll = -float(np.log(probs[ref_idx]))
        loss = risk_term + config.nll_weight * nll
        if not math.isfinite(loss):
            raise RuntimeError(f"training diverged at step {step}: loss={loss}")
        records.append(TrainStep(
            loss_total=loss,
            expected_fa=float(np.dot(p_sel, fa)),
            expected_fr=float(np.dot(p_sel, fr)),
            expected_w=float(np.dot(p_sel, w)),
            argmax_candidate=int(np.argmax(logits)),
        ))
        if step == config.steps:
            break
        grad = probs * (risks * sel_mask - risk_term)
        grad += config.nll_weight * probs
        grad[ref_idx] -= config.nll_weight
        logits = logits - config.learning_rate * grad

    return TrainTrace(records=tuple(records),
                      final_model=ToyModel(tuple(float(v) for v in logits)))


def candidate_probs(trace: TrainTrace) -> Tuple[float, ...]:
    """Softmax of the trace's final logits."""
    logits = np.array(trace.final_model.logits)
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return tuple(float(v) for v in exp / exp.sum())
