"""Command-line front end.

    ravenlab gen       --config center --n 100 --seed 0 --size 40 --out DIR
    ravenlab oracle    --data DIR
    ravenlab train     --data DIR --mode meta --out DIR [hyperparameters]
    ravenlab eval      --model FILE --data DIR [--mode meta]
    ravenlab gradcheck
    ravenlab xfer      --train center --test left_right [hyperparameters]
    ravenlab holdout   --rule distribute_three [hyperparameters]
    ravenlab report    --runs DIR [DIR ...] --format csv --out FILE

Exit codes: 0 success, 1 bad input, 2 internal failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import errors
from .errors import RavenError, ValidationError

_CONFIG_NAMES = (
    "center", "grid_2x2", "grid_3x3", "left_right", "up_down",
    "out_in_center", "out_in_grid",
)
_RULE_NAMES = ("constant", "progression", "arithmetic", "distribute_three")


def _config_list(values: List[str]) -> List[str]:
    """Accept both space- and comma-separated layout names."""
    names = [name for chunk in values for name in chunk.split(",") if name]
    for name in names:
        if name not in _CONFIG_NAMES:
            raise ValidationError(
                f"unknown configuration {name!r}; pick from {_CONFIG_NAMES}"
            )
    return names


def _add_train_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("plain", "meta"), default="plain")
    p.add_argument("--lambda", dest="lam", type=float, default=0.01,
                   help="margin loss weight")
    p.add_argument("--mu", type=float, default=0.1, help="alignment loss weight")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)


def _train_config(args) -> "TrainConfig":
    from .harness import TrainConfig

    return TrainConfig(
        mode=args.mode, lam=args.lam, mu=args.mu, lr=args.lr,
        batch_size=args.batch, epochs=args.epochs, seed=args.seed,
    )


def cmd_gen(args) -> int:
    from .puzzles import Config, generate_puzzle
    from .puzzles.dataset import save_dataset
    from .render import render_puzzle

    if args.n <= 0:
        raise ValidationError("--n must be positive")
    config = Config(args.config)
    puzzles, rasters = [], []
    for i in range(args.n):
        p = generate_puzzle(config, args.seed + i)
        puzzles.append(p)
        rasters.append(render_puzzle(p, args.size))
    save_dataset(args.out, puzzles, np.stack(rasters))
    print(f"wrote {args.n} {config.value} instances to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    from .oracle import solve
    from .puzzles.dataset import load_dataset

    puzzles, _ = load_dataset(args.data)
    hits = 0
    ties = []
    for p in puzzles:
        try:
            hits += solve(p) == p.label
        except errors.AmbiguousTie:
            ties.append((p.config.value, p.seed))
    print(f"oracle accuracy: {hits}/{len(puzzles)} = {hits / len(puzzles):.4f}")
    if ties:
        print(f"ties on {len(ties)} instances: {ties[:10]}")
    return 0


def cmd_train(args) -> int:
    from .harness import split_dataset, train
    from .puzzles.dataset import load_dataset

    puzzles, rasters = load_dataset(args.data)
    items = list(zip(puzzles, rasters))
    tr, va, _ = split_dataset(items, args.seed)
    os.makedirs(args.out, exist_ok=True)
    tc = _train_config(args)
    params, history = train(
        tc, tr, va,
        log_path=os.path.join(args.out, "log.jsonl"),
        checkpoint_path=os.path.join(args.out, "checkpoint.mmn"),
    )
    best = max(((h["val_acc"] or 0.0) for h in history), default=0.0)
    with open(os.path.join(args.out, "metrics.json"), "w") as fh:
        json.dump(
            {
                "experiment": "train",
                "mode": tc.mode,
                "seed": tc.seed,
                "lam": tc.lam,
                "mu": tc.mu,
                "epochs_run": len(history),
                "best_val_acc": best,
            },
            fh, indent=2,
        )
    print(f"trained {len(history)} epochs; best val acc {best:.4f}; artifacts in {args.out}")
    return 0


def cmd_eval(args) -> int:
    from .autograd import Tensor
    from .autograd.serial import load_tensors
    from .harness import evaluate
    from .puzzles.dataset import load_dataset

    arrays = load_tensors(args.model)
    params = {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()}
    puzzles, rasters = load_dataset(args.data)
    rec = evaluate(params, list(zip(puzzles, rasters)), args.mode)
    print(json.dumps(
        {"accuracy": rec.accuracy, "per_config": rec.per_config, "n": rec.count},
        indent=2,
    ))
    return 0


def cmd_gradcheck(args) -> int:
    from .autograd import (
        Tensor, conv2d_nhwc, cosine_similarity, gradient_check, matmul,
        mul, reduce_mean, reduce_sum, relu, softmax_cross_entropy,
    )

    rng = np.random.default_rng(args.seed)

    def t(*shape):
        return Tensor(rng.standard_normal(shape) * 0.5, requires_grad=True)

    suite = {
        "elementwise": (lambda a, b: reduce_sum(mul(relu(a), b)), [t(4, 5), t(4, 5)]),
        "matmul": (lambda a, b: reduce_sum(matmul(a, b)), [t(3, 4), t(4, 2)]),
        "conv2d": (
            lambda x, w, b: reduce_sum(conv2d_nhwc(x, w, b, stride=2, pad=1)),
            [t(2, 5, 5, 2), t(3, 3, 2, 3), t(3)],
        ),
        "cosine": (lambda a, b: reduce_sum(cosine_similarity(a, b)), [t(3, 6), t(3, 6)]),
        "softmax_ce": (
            lambda s: reduce_mean(softmax_cross_entropy(s, [1, 0, 3])),
            [t(3, 4)],
        ),
        "reduction": (lambda a: reduce_sum(mul(reduce_mean(a, axis=1), reduce_mean(a, axis=1))), [t(3, 5)]),
    }
    worst_name, worst = "", 0.0
    for name, (f, inputs) in suite.items():
        err = gradient_check(f, inputs)
        status = "ok" if err < 1e-4 else "FAIL"
        print(f"{status:4s} {name:12s} max rel err {err:.3e}")
        if err > worst:
            worst_name, worst = name, err
    if worst >= 1e-4:
        print(f"worst: {worst_name} at {worst:.3e}")
        return 1
    print("all gradient checks passed")
    return 0


def cmd_xfer(args) -> int:
    from .harness import run_transfer
    from .puzzles import Config

    tc = _train_config(args)
    rows = run_transfer(
        [Config(c) for c in _config_list(args.train)],
        [Config(c) for c in _config_list(args.test)],
        tc,
        n_train=args.n_train, n_val=args.n_val, n_test=args.n_test,
        data_seed=args.data_seed,
    )
    for r in rows:
        print(f"{r['train_on']} -> {r['configuration']}: {r['accuracy']:.4f}")
    if args.out:
        from .harness import emit_report

        emit_report(rows, args.out, "json" if args.out.endswith(".json") else "csv")
    return 0


def cmd_holdout(args) -> int:
    from .harness import run_holdout
    from .puzzles import Config, RuleFamily

    tc = _train_config(args)
    rows = run_holdout(
        RuleFamily[args.rule.upper()],
        [Config(c) for c in _config_list(args.configs)],
        tc,
        n_train=args.n_train, n_val=args.n_val, n_test=args.n_test,
        data_seed=args.data_seed,
    )
    for r in rows:
        print(f"holdout {r['holdout']} on {r['configuration']}: {r['accuracy']:.4f}")
    if args.out:
        from .harness import emit_report

        emit_report(rows, args.out, "json" if args.out.endswith(".json") else "csv")
    return 0


def cmd_report(args) -> int:
    from .harness import emit_report

    rows: List[dict] = []
    for run_dir in args.runs:
        path = os.path.join(run_dir, "metrics.json")
        if not os.path.isfile(path):
            raise ValidationError(f"no metrics.json under {run_dir!r}")
        with open(path) as fh:
            rec = json.load(fh)
        rec["run"] = os.path.basename(os.path.normpath(run_dir))
        rows.append(rec)
    emit_report(rows, args.out, args.format)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ravenlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate and render a dataset")
    p.add_argument("--config", choices=_CONFIG_NAMES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=40)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("oracle", help="run the symbolic solver over a dataset")
    p.add_argument("--data", required=True)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("train", help="train on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_train_opts(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("plain", "meta"), default="plain")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of core ops")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("xfer", help="train on one layout, test on others")
    p.add_argument("--train", nargs="+", required=True, metavar="CFG[,CFG]")
    p.add_argument("--test", nargs="+", required=True, metavar="CFG[,CFG]")
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-val", type=int, default=500)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--out")
    _add_train_opts(p)
    p.set_defaults(fn=cmd_xfer)

    p = sub.add_parser("holdout", help="train without a rule family, test on it")
    p.add_argument("--rule", choices=_RULE_NAMES, required=True)
    p.add_argument("--configs", nargs="+", default=["center"], metavar="CFG[,CFG]")
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-val", type=int, default=500)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--out")
    _add_train_opts(p)
    p.set_defaults(fn=cmd_holdout)

    p = sub.add_parser("report", help="collect run metrics into one table")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    return ap


# Raised for problems a caller can fix by changing inputs; everything else
# that escapes a command is reported as an internal failure.
_USER_ERRORS = (
    ValidationError,
    errors.FormatError,
    errors.UnsupportedSize,
    errors.TooFew,
    errors.EmptyAfterFilter,
    ValueError,
    OSError,
)


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        # argparse handles --help (0) and usage errors itself
        return 0 if err.code in (0, None) else 1
    try:
        return args.fn(args)
    except _USER_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - boundary of the process
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
