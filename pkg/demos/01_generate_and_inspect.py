"""Generate one puzzle instance and look at its symbolic structure.

Run:  python3 demos/01_generate_and_inspect.py
"""
import numpy as np

from ravenlab.puzzles import Attribute, Config, generate_puzzle, group_value
from ravenlab.render import render_panel

puzzle = generate_puzzle(Config.CENTER, seed=7)

print(f"configuration: {puzzle.config.value}   seed: {puzzle.seed}")
print(f"answer: candidate #{puzzle.label}")
print("\ngoverning rules:")
for spec in puzzle.annotation.rules:
    print(f"  component {spec.slot}  {spec.attribute.label:<8s}  {spec.rule.describe()}")

print("\nmeta-target bits (attributes 0-4, families 5-8, per component):")
print(" ", puzzle.meta.bits)

print("\nvalue grid (type, size, color) across the 3x3 matrix:")
rows = [puzzle.context[0:3], puzzle.context[3:6],
        puzzle.context[6:8] + (puzzle.candidates[puzzle.label],)]
for r, row in enumerate(rows):
    cells = []
    for panel in row:
        t = group_value(panel, 0, Attribute.TYPE)
        s = group_value(panel, 0, Attribute.SIZE)
        c = group_value(panel, 0, Attribute.COLOR)
        cells.append(f"(t={t} s={s} c={c})")
    print(f"  row {r + 1}: " + "  ".join(cells))

print("\nthe missing panel, rendered at 40x40 (darker ink = higher color):")
img = render_panel(puzzle.candidates[puzzle.label], puzzle.config, 40)
shades = " .:-=+*#%@"
for line in img[::2]:
    print("".join(shades[min(9, (255 - v) // 26)] * 2 for v in line[::2]))
