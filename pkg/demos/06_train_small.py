"""Train the network for real, at small scale, in both supervision modes.

Takes a few minutes on one core.  Accuracy will be modest at this scale;
the point is to watch the meta-supervised run pull ahead of the plain one.

Run:  python3 demos/06_train_small.py
"""
import time

from ravenlab.harness import TrainConfig, build_corpus, evaluate, train
from ravenlab.puzzles import Config

train_items = build_corpus([Config.CENTER], 300, master_seed=1)
val_items = build_corpus([Config.CENTER], 80, master_seed=2)
test_items = build_corpus([Config.CENTER], 120, master_seed=3)
print(f"{len(train_items)} train / {len(val_items)} val / {len(test_items)} test")

for mode in ("plain", "meta"):
    cfg = TrainConfig(mode=mode, epochs=8, batch_size=32, seed=0)
    t0 = time.time()
    params, history = train(cfg, train_items, val_items)
    rec = evaluate(params, test_items, mode)
    mins = (time.time() - t0) / 60
    curve = " ".join(f"{h['val_acc']:.2f}" for h in history)
    print(f"\n{mode:>5s}: val curve {curve}")
    print(f"{'':>5s}  test accuracy {rec.accuracy:.3f} after {mins:.1f} min "
          f"(random would be 0.125)")
