#!/usr/bin/env python3
"""Compare turn-error weights on the bundled st-vs-word scenario.

The scenario pits the reference against a candidate with one word
substitution and a candidate that drops the turn marker.  With heavy
false-accept/false-reject weights the trainer should starve the
dropped-turn candidate of probability mass; with flat weights it should
not care.  This script runs both settings plus the plain word-error risk
and prints where the mass ends up.
"""

import argparse

from scdkit.risk import RiskConfig, RiskKind
from scdkit.tokens import seq_to_text
from scdkit.trainer import TrainConfig, candidate_probs, st_vs_word_space, train


def run(name, risk, steps, lr):
    space = st_vs_word_space()
    trace = train(space, TrainConfig(learning_rate=lr, steps=steps, risk=risk))
    probs = candidate_probs(trace)
    first, last = trace.initial, trace.final
    print(f"\n== {name}")
    print(f"loss           {first.loss_total:.6f} -> {last.loss_total:.6f}")
    print(f"expected fa+fr {first.expected_fa + first.expected_fr:.6f} -> "
          f"{last.expected_fa + last.expected_fr:.6f}")
    print(f"expected w     {first.expected_w:.6f} -> {last.expected_w:.6f}")
    for i, (cand, p) in enumerate(zip(space.candidates, probs)):
        marker = " <- argmax" if i == last.argmax_candidate else ""
        print(f"  p({seq_to_text(cand)!r}) = {p:.6f}{marker}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--lr", type=float, default=0.5)
    args = parser.parse_args()

    run("turn-weighted (alpha=1, beta=gamma=10)", RiskConfig(), args.steps, args.lr)
    run("flat weights (alpha=beta=gamma=1)",
        RiskConfig(alpha=1.0, beta=1.0, gamma=1.0), args.steps, args.lr)
    run("word-error-only risk",
        RiskConfig(risk_kind=RiskKind.WORD_ERROR_ONLY), args.steps, args.lr)


if __name__ == "__main__":
    main()
