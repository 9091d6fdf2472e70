"""Watch the symbolic solver infer rules from two rows and pick the answer.

Run:  python3 demos/03_oracle_inference.py
"""
from ravenlab.oracle import infer_rules, score_candidates, solve
from ravenlab.puzzles import Config, generate_puzzle

puzzle = generate_puzzle(Config.UP_DOWN, seed=4)

print(f"configuration: {puzzle.config.value}")
print("\nannotated rules (hidden from the solver):")
for spec in puzzle.annotation.rules:
    print(f"  component {spec.slot}  {spec.attribute.label:<8s}  {spec.rule.describe()}")

inferred = infer_rules(puzzle.context[0:3], puzzle.context[3:6], puzzle.config)
print("\nrules consistent with the first two rows:")
for (slot, attr), specs in sorted(inferred.items()):
    names = ", ".join(s.rule.describe() for s in specs) or "-"
    print(f"  component {slot}  {attr.label:<8s}  {names}")

scores = score_candidates(puzzle.context, puzzle.candidates, puzzle.config)
print(f"\ncandidate scores: {scores}")
print(f"solver picks #{solve(puzzle)}, truth is #{puzzle.label}")

n = 200
hits = sum(
    solve(p) == p.label
    for p in (generate_puzzle(c, s) for c in Config for s in range(n // 8))
)
total = len(list(Config)) * (n // 8)
print(f"\nsweep: {hits}/{total} solved across all seven layouts")
