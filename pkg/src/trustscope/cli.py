"""``trustscope`` command line: gen, train, eval, trust, cam."""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from . import config as cfg
from .data.layout import is_nonempty_dir, read_split, write_dataset
from .data.logs import read_prediction_log, write_grid_csv, write_prediction_log, write_table_csv
from .data.netpbm import read_pgm, write_ppm
from .data.preprocess import preprocess
from .data.split import split_validation
from .models import checkpoint
from .models.registry import init_model
from .models.train import TrainConfig, TrainHistory, train
from .pipeline import prediction_rows, report_from_rows, synthetic_splits
from .saliency import ablation_cam, render_overlay
from .trust import TrustParams, select_threshold

ARCH_FLAGS = {"swin-toy": "swin_toy", "cnn-toy": "cnn_toy"}
GEN_SEED = 42

log = logging.getLogger("trustscope")


class CLIError(Exception):
    pass


def _sidecar(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix)


def _resolve(args, **flags) -> dict:
    return cfg.resolve(flags, getattr(args, "config", None))


def cmd_gen(args) -> int:
    conf = _resolve(args, seed=args.seed)
    seed = conf.get("seed", GEN_SEED)
    out = Path(args.out)
    if is_nonempty_dir(out):
        if not args.force:
            raise CLIError(f"{out} exists and is not empty (use --force)")
        shutil.rmtree(out)
    splits = synthetic_splits(args.n_train, args.n_test, args.size, args.pos_frac, seed)
    write_dataset(out, splits)
    print(f"{'Split':<8}{'Negative':>10}{'Positive':>10}{'Total':>8}")
    for name in ("train", "test"):
        s = splits[name]
        pos = sum(x.label for x in s)
        print(f"{name.title():<8}{len(s) - pos:>10,}{pos:>10,}{len(s):>8,}")
    return 0


def _train_config(conf: dict) -> TrainConfig:
    fields = set(TrainConfig.__dataclass_fields__)
    return TrainConfig(**{k: v for k, v in conf.items() if k in fields})


def cmd_train(args) -> int:
    arch = ARCH_FLAGS.get(args.arch)
    if arch is None:
        raise CLIError(f"unknown architecture {args.arch!r}; expected one of {sorted(ARCH_FLAGS)}")
    conf = _resolve(args, epochs=args.epochs, initial_lr=args.lr, seed=args.seed,
                    freeze_backbone=True if args.freeze else None)
    tc = _train_config(conf)
    train_all = read_split(args.data, "train")
    tr, val = split_validation(train_all, conf.get("val_fraction", 0.1), tc.seed)
    if args.init:
        model = checkpoint.load(args.init)
        if model.arch != arch:
            raise CLIError(f"--init checkpoint is {model.arch}, not {arch}")
    else:
        model = init_model(arch, seed=tc.seed)
    best, hist, threshold = train(model, tr, val, tc)
    checkpoint.save(args.out, best)
    hist_path = _sidecar(args.out, ".history.csv")
    write_table_csv(hist_path, TrainHistory.HEADER, hist.rows())
    print(f"arch={arch} epochs={tc.epochs} initial_lr={tc.initial_lr:g} best_epoch={hist.best_epoch} "
          f"val_accuracy={hist.val_accuracy[hist.best_epoch]:.3f}")
    print(f"threshold={threshold:.6f}")
    print(f"checkpoint={args.out} history={hist_path}")
    return 0


def _trust_params(conf: dict, threshold: float) -> TrustParams:
    return TrustParams(conf.get("alpha", 1.0), conf.get("beta", 1.0), threshold)


def cmd_eval(args) -> int:
    conf = _resolve(args, alpha=args.alpha, beta=args.beta)
    model = checkpoint.load(args.model)
    test = read_split(args.data, "test")
    if not test:
        raise CLIError(f"{args.data}: empty test split")
    rows = prediction_rows(model, test)
    report, _ = report_from_rows(rows, _trust_params(conf, model.threshold))
    log_path = _sidecar(args.report, ".preds.csv")
    write_prediction_log(log_path, rows)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    print(report.format_table())
    print(f"report={args.report} predictions={log_path}")
    return 0


def cmd_trust(args) -> int:
    conf = _resolve(args, alpha=args.alpha, beta=args.beta, threshold=args.threshold)
    rows = read_prediction_log(args.log)
    if not rows:
        raise CLIError(f"{args.log}: no records")
    if args.auto_threshold:
        val = read_prediction_log(args.auto_threshold)
        threshold = select_threshold([r.raw_score for r in val], [r.label for r in val])
    else:
        threshold = conf.get("threshold", 0.5)
    report, _ = report_from_rows(rows, _trust_params(conf, threshold))
    print(report.format_table())
    return 0


def cmd_cam(args) -> int:
    model = checkpoint.load(args.model)
    pixels = read_pgm(args.image)
    s = model.input_size
    if pixels.shape != (s, s):
        raise CLIError(f"{args.image} is {pixels.shape[0]}x{pixels.shape[1]}, model expects {s}x{s}")
    cam = ablation_cam(model, preprocess(pixels, size=s))
    write_ppm(args.out, render_overlay(pixels, cam.upsampled()))
    if args.raw:
        write_grid_csv(args.raw, cam.grid)
    print(f"layer={cam.source_layer} grid={cam.grid.shape[0]}x{cam.grid.shape[1]} overlay={args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trustscope", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="key = value config file")

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("--out", required=True, metavar="DIR")
    g.add_argument("--n-train", type=int, default=2000)
    g.add_argument("--n-test", type=int, default=400)
    g.add_argument("--size", type=int, default=64)
    g.add_argument("--pos-frac", type=float, default=0.5)
    g.add_argument("--seed", type=int)
    g.add_argument("--force", action="store_true", help="replace a non-empty output directory")
    common(g)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a toy model")
    t.add_argument("--arch", required=True, metavar="{swin-toy,cnn-toy}")
    t.add_argument("--data", required=True, metavar="DIR")
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--freeze", action="store_true", help="train the head only")
    t.add_argument("--init", metavar="CKPT", help="start from an existing checkpoint")
    t.add_argument("--out", required=True, metavar="model.tscp")
    common(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score the test split and write a JSON report")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True, metavar="DIR")
    e.add_argument("--alpha", type=float)
    e.add_argument("--beta", type=float)
    e.add_argument("--report", required=True, metavar="out.json")
    common(e)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("trust", help="trust scores for an external prediction log")
    r.add_argument("--log", required=True, metavar="preds.csv")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--threshold", type=float)
    src.add_argument("--auto-threshold", metavar="val.csv")
    r.add_argument("--alpha", type=float)
    r.add_argument("--beta", type=float)
    common(r)
    r.set_defaults(func=cmd_trust)

    c = sub.add_parser("cam", help="Ablation-CAM overlay for one image")
    c.add_argument("--model", required=True)
    c.add_argument("--image", required=True, metavar="x.pgm")
    c.add_argument("--out", required=True, metavar="heat.ppm")
    c.add_argument("--raw", metavar="map.csv")
    c.set_defaults(func=cmd_cam)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (CLIError, OSError, ValueError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"trustscope {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
