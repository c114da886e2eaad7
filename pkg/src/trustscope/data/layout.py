"""On-disk dataset layout: ``{train,test}/{neg,pos}/<id>.pgm`` plus ``meta.csv``."""

from __future__ import annotations

import csv
import os
from pathlib import Path

from .netpbm import read_pgm, write_pgm
from .synthetic import Sample

META_HEADER = ["id", "label", "box_r", "box_c", "box_h", "box_w"]
SPLITS = ("train", "test")
CLASS_DIRS = {0: "neg", 1: "pos"}


def write_dataset(root, splits: dict[str, list[Sample]]):
    root = Path(root)
    meta = []
    for split in SPLITS:
        for d in CLASS_DIRS.values():
            (root / split / d).mkdir(parents=True, exist_ok=True)
        for s in splits.get(split, []):
            write_pgm(root / split / CLASS_DIRS[s.label] / f"{s.id}.pgm", s.pixels)
            box = list(s.blob_box) if s.blob_box else ["", "", "", ""]
            meta.append([s.id, s.label, *box])
    with open(root / "meta.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(META_HEADER)
        w.writerows(meta)


def read_meta(root) -> dict[str, tuple[int, tuple[int, int, int, int] | None]]:
    out = {}
    with open(Path(root) / "meta.csv", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != META_HEADER:
            raise ValueError(f"{root}/meta.csv: unexpected header {reader.fieldnames}")
        for row in reader:
            box = None
            if row["box_r"]:
                box = tuple(int(row[k]) for k in META_HEADER[2:])
            out[row["id"]] = (int(row["label"]), box)
    return out


def read_split(root, split: str) -> list[Sample]:
    """Load one split sorted by id; labels and boxes come from ``meta.csv``."""
    root = Path(root)
    if not (root / split).is_dir():
        raise FileNotFoundError(f"{root}: missing '{split}' directory")
    meta = read_meta(root)
    samples = []
    for label, d in CLASS_DIRS.items():
        for f in sorted((root / split / d).glob("*.pgm")):
            sid = f.stem
            if sid not in meta:
                raise ValueError(f"{f}: id missing from meta.csv")
            mlabel, box = meta[sid]
            if mlabel != label:
                raise ValueError(f"{f}: directory says label {label}, meta.csv says {mlabel}")
            samples.append(Sample(sid, read_pgm(f), label, box))
    samples.sort(key=lambda s: s.id)
    return samples


def is_nonempty_dir(path) -> bool:
    return os.path.isdir(path) and any(os.scandir(path))
