"""Experiment configuration files.

The format is INI-style text with up to four sections::

    [lattice]
    ell = 4
    L = 4

    [model]
    J = 1.0
    lambda = 0.25
    v_shells = 2:1.0

    [run]
    beta_grid = 0.2,0.44,0.7

    [output]
    format = csv
    path = out.csv

``v_shells`` lists ``r2:v`` entries separated by commas.  Keys in ``[run]``
are the long option names of the subcommand with dashes as underscores.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

LATTICE_KEYS = {"ell", "l", "ell_list"}
MODEL_KEYS = {"j", "lambda", "v_shells"}
OUTPUT_KEYS = {"format", "path"}


class ConfigError(ValueError):
    """Configuration that fails validation."""


@dataclass
class ExperimentConfig:
    lattice: dict[str, str] = field(default_factory=dict)
    model: dict[str, str] = field(default_factory=dict)
    run: dict[str, str] = field(default_factory=dict)
    output: dict[str, str] = field(default_factory=dict)


def parse_v_shells(text: str) -> tuple[tuple[int, float], ...]:
    """``"2:1.0,5:0.5"`` -> ``((2, 1.0), (5, 0.5))``."""
    text = text.strip()
    if not text:
        return ()
    out = []
    for item in text.split(","):
        try:
            r2, v = item.split(":")
            out.append((int(r2), float(v)))
        except ValueError:
            raise ConfigError(f"bad v_shells entry {item!r}; expected r2:v") from None
    return tuple(out)


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated number list, got {text!r}") from None


def load_config(path: str | os.PathLike, run_keys: set[str]) -> ExperimentConfig:
    """Read and validate a configuration file.

    Raises:
        ConfigError: for unreadable files, unknown sections or unknown keys.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str.lower
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    allowed = {"lattice": LATTICE_KEYS, "model": MODEL_KEYS, "run": run_keys, "output": OUTPUT_KEYS}
    cfg = ExperimentConfig()
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(f"unknown config section [{section}]")
        items = dict(parser.items(section))
        unknown = set(items) - allowed[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        setattr(cfg, section, items)
    if "format" in cfg.output and cfg.output["format"] not in ("json", "csv"):
        raise ConfigError("output format must be json or csv")
    return cfg
