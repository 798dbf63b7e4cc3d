"""Run configuration: defaults, named presets, JSON files and overrides.

A config file is plain JSON mirroring RunConfig's structure: top-level keys
plus nested "unsup", "sup" and "dynamics" sections.  Precedence, lowest to
highest: built-in defaults, preset, config file, command-line overrides.
Unknown keys are rejected by name.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .dynamics import DynamicsConfig
from .errors import UsageError
from .head import SupConfig
from .trainer import UnsupConfig

__all__ = ["RunConfig", "PRESETS", "build_config", "config_to_dict"]


@dataclass(frozen=True)
class RunConfig:
    out_dir: str = "out"
    seed: int | None = None
    normalize: str = "scale01"
    scale_divisor: float = 255.0
    mnist_images: str | None = None
    mnist_labels: str | None = None
    mnist_test_images: str | None = None
    mnist_test_labels: str | None = None
    cifar_dir: str | None = None
    unsup: UnsupConfig = field(default_factory=UnsupConfig)
    sup: SupConfig = field(default_factory=SupConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    image_every: int = 0
    grid_rows: int = 4
    grid_cols: int = 5
    select: str = "first"
    n_list: tuple[float, ...] = ()
    sweep_lr_tables: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.normalize not in ("scale01", "unit_l2"):
            raise UsageError(f"invalid config field normalize: {self.normalize!r}")
        if not self.scale_divisor > 0:
            raise UsageError(f"invalid config field scale_divisor: {self.scale_divisor}")
        if self.image_every < 0:
            raise UsageError(f"invalid config field image_every: {self.image_every}")
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise UsageError("invalid config field grid_rows/grid_cols: must be >= 1")
        if self.select not in ("first", "random"):
            raise UsageError(f"invalid config field select: {self.select!r}")


# Published tunings.  The end-to-end baselines share one optimizer recipe;
# only the CIFAR variant has a documented source, so MNIST reuses it.
PRESETS: dict[str, dict[str, Any]] = {
    "mnist-bio": {
        "normalize": "scale01",
        "unsup": {"p": 4.0, "delta": 0.4, "k": 2, "hidden": 2000, "epochs": 100,
                  "batch": 100, "lr0": 0.04},
        "sup": {"n": 4.5, "m": 10, "epochs": 300, "batch": 100,
                "lr_table": [[0, 0.001], [100, 0.0005], [150, 0.0001],
                             [200, 0.00005], [250, 0.00001]]},
    },
    "mnist-e2e": {
        "normalize": "scale01",
        "unsup": {"hidden": 2000},
        "sup": {"n": 1.0, "m": 4, "epochs": 100, "batch": 100,
                "lr_table": [[0, 0.004], [50, 0.001]]},
    },
    "cifar-bio": {
        "normalize": "unit_l2",
        "unsup": {"p": 4.0, "delta": 0.3, "k": 2, "hidden": 2000, "epochs": 100,
                  "batch": 100, "lr0": 0.02},
        "sup": {"n": 10.0, "m": 6, "epochs": 500, "batch": 10,
                "lr_table": [[0, 0.004], [100, 0.002], [150, 0.001], [200, 0.0005],
                             [250, 0.0002], [300, 0.0001], [350, 0.00005],
                             [400, 0.00002], [450, 0.00001]]},
    },
    "cifar-e2e": {
        "normalize": "unit_l2",
        "unsup": {"hidden": 2000},
        "sup": {"n": 1.0, "m": 4, "epochs": 100, "batch": 100,
                "lr_table": [[0, 0.004], [50, 0.001]]},
    },
}

_SECTIONS = {"unsup": UnsupConfig, "sup": SupConfig, "dynamics": DynamicsConfig}


def _section_fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _check_keys(values: dict, valid: set[str], prefix: str = "") -> None:
    for key in values:
        if key not in valid:
            raise UsageError(f"unknown config field: {prefix}{key}")


def _normalize_section(name: str, values: dict) -> dict:
    _check_keys(values, _section_fields(_SECTIONS[name]), prefix=f"{name}.")
    values = dict(values)
    if name == "sup" and "lr_table" in values:
        try:
            values["lr_table"] = tuple((int(e), float(lr)) for e, lr in values["lr_table"])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid config field sup.lr_table: {values['lr_table']!r}") from exc
    return values


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if key in _SECTIONS and isinstance(value, dict):
            out[key] = {**out.get(key, {}), **value}
        else:
            out[key] = value
    return out


def build_config(
    preset: str | None = None,
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """Assemble a RunConfig from a preset, a JSON file and flat overrides.

    Override keys use dotted paths into sections ("unsup.p"); top-level keys
    are plain names.  Raises UsageError naming the first unknown field.
    """
    merged: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}, valid: {', '.join(sorted(PRESETS))}")
        merged = _merge(merged, PRESETS[preset])
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError(f"config file {path} must hold a JSON object")
        merged = _merge(merged, loaded)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in dotted:
            section, key = dotted.split(".", 1)
            merged = _merge(merged, {section: {key: value}})
        else:
            merged = _merge(merged, {dotted: value})

    top_fields = _section_fields(RunConfig)
    _check_keys(merged, top_fields)
    kwargs: dict[str, Any] = {}
    for key, value in merged.items():
        if key in _SECTIONS:
            try:
                kwargs[key] = _SECTIONS[key](**_normalize_section(key, value))
            except UsageError:
                raise
            except (TypeError, ValueError) as exc:
                raise UsageError(f"invalid config section {key}: {exc}") from exc
        elif key == "n_list":
            kwargs[key] = tuple(float(x) for x in value)
        else:
            kwargs[key] = value
    try:
        cfg = RunConfig(**kwargs)
    except UsageError:
        raise
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc

    if cfg.seed is not None:
        cfg = dataclasses.replace(
            cfg,
            unsup=dataclasses.replace(cfg.unsup, seed=cfg.seed),
            sup=dataclasses.replace(cfg.sup, seed=cfg.seed),
        )
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    """JSON-serializable snapshot of a RunConfig (for checkpoint sidecars)."""
    out = dataclasses.asdict(cfg)
    out["sup"]["lr_table"] = [list(pair) for pair in cfg.sup.lr_table]
    out["n_list"] = list(cfg.n_list)
    return out
