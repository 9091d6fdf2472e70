"""Open up the network: granular features, attribute modules, rule readout.

Run:  python3 demos/05_model_anatomy.py
"""
import numpy as np

from ravenlab.model import (
    active_groups,
    infer_rule,
    init_params,
    predict,
    score_candidates,
)
from ravenlab.puzzles import Config, RuleFamily, generate_puzzle
from ravenlab.render import render_puzzle

puzzle = generate_puzzle(Config.CENTER, seed=12)
rasters = render_puzzle(puzzle, 40)
params = init_params(seed=0)

print(f"parameters: {len(params)} tensors, "
      f"{sum(p.data.size for p in params.values())} scalars")
print(f"active modules for {puzzle.config.value}: "
      f"{[(s, a.label) for s, a in active_groups(puzzle.config)]}")

sv = score_candidates(params, rasters, puzzle.config, mode="meta",
                      annotation=puzzle.annotation)
print("\ncandidate scores (untrained, so near-arbitrary):")
print(np.array_str(sv.scores.data, precision=3))
print(f"prediction: #{predict(sv)}   truth: #{puzzle.label}")

print("\nrow-3 rule similarities for the answer candidate, per module:")
fam_names = [f.label for f in RuleFamily]
for (slot, attr), sims in sorted(sv.rule_sims.items()):
    row = sims[puzzle.label]
    chosen = fam_names[int(row.argmax())]
    truth = puzzle.annotation.rule_for(slot, attr)
    truth_name = truth.family.label if truth else "-"
    print(f"  {attr.label:<8s} sims {np.array_str(row, precision=2):<28s}"
          f" -> {chosen:<16s} (annotated: {truth_name})")

print("\nthe four rule-family embeddings are mutually orthogonal:")
table = params["rule_table"].data
print(np.array_str(table @ table.T, precision=2, suppress_small=True))
choice, sims = infer_rule(params, table[RuleFamily.ARITHMETIC])
print(f"nearest family to the arithmetic embedding: {fam_names[choice]}")
