"""Run configuration: defaults < TRUSTSCOPE_SEED < config file < command-line flags."""

from __future__ import annotations

import os
from pathlib import Path

DEFAULT_FILE = "trustscope.cfg"
SEED_ENV = "TRUSTSCOPE_SEED"


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# every training and trust field, with its parser
KEYS = {
    "epochs": int,
    "initial_lr": float,
    "momentum": float,
    "weight_decay": float,
    "lr_min": float,
    "seed": int,
    "freeze_backbone": _bool,
    "flip_prob": float,
    "batch_size": int,
    "threshold_mode": str,
    "val_fraction": float,
    "alpha": float,
    "beta": float,
    "threshold": float,
}


class ConfigError(ValueError):
    pass


def parse_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = KEYS[key](value)
            except ValueError as e:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {e}") from None
    return out


def resolve(flags: dict, config_path=None, env=None) -> dict:
    """Merge sources into one dict of known keys.

    ``flags`` entries set to ``None`` count as absent.  Without an explicit
    ``config_path`` a ``trustscope.cfg`` in the working directory is used if
    present.
    """
    env = os.environ if env is None else env
    merged = {}
    if env.get(SEED_ENV):
        try:
            merged["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer") from None
    if config_path is None and Path(DEFAULT_FILE).is_file():
        config_path = DEFAULT_FILE
    if config_path is not None:
        merged.update(parse_config_file(config_path))
    for k, v in flags.items():
        if v is None:
            continue
        if k not in KEYS:
            raise ConfigError(f"unknown key {k!r}")
        merged[k] = v
    return merged
