"""Python bindings for the projgan C++ core.

Volumes are float32 arrays shaped (L, W, D) with values in [0, 1]; projection
maps and masks are (L, W). Configs are plain dicts using the same keys as the
JSON config files.
"""

import json

import torch  # noqa: F401  loads libtorch before the extension

from . import _core
from ._core import (
    Error,
    mae_volume,
    project_mean,
    psnr_volume,
    segment_global_mean_threshold,
    ssim_volume,
    translate,
    vdc,
    vde,
    vessel_density,
    weighted_metrics,
)

__all__ = [
    "Error",
    "config",
    "config_hash",
    "evaluate_checkpoint",
    "evaluate_predictions",
    "generate_dataset",
    "mae_volume",
    "phantom_sample",
    "pretrain_hcg",
    "pretrain_vseg",
    "project_mean",
    "psnr_volume",
    "segment_global_mean_threshold",
    "ssim_volume",
    "train_transpro",
    "translate",
    "vdc",
    "vde",
    "vessel_density",
    "weighted_metrics",
]


def _text(cfg):
    return json.dumps(cfg if cfg is not None else {})


def config(overrides=None):
    """Full config dict: defaults with `overrides` applied by the strict C++ parser."""
    return json.loads(_core.normalize_config(_text(overrides)))


def config_hash(cfg=None):
    return _core.config_hash(_text(cfg))


def generate_dataset(cfg, root):
    return json.loads(_core.generate_dataset(_text(cfg), str(root)))


def phantom_sample(seed, cfg=None):
    """(oct, octa, mask) for one phantom seed."""
    return _core.phantom_sample(seed, _text(cfg))


def _stage(result):
    out = dict(result)
    out["log"] = json.loads(out["log"])
    out["extra"] = json.loads(out["extra"])
    return out


def pretrain_vseg(cfg, quiet=True):
    return _stage(_core.pretrain_vseg(_text(cfg), quiet))


def pretrain_hcg(cfg, quiet=True):
    return _stage(_core.pretrain_hcg(_text(cfg), quiet))


def train_transpro(cfg, vseg_checkpoint, gpre_checkpoint, quiet=True):
    return _stage(_core.train_transpro(_text(cfg), str(vseg_checkpoint), str(gpre_checkpoint), quiet))


def evaluate_checkpoint(checkpoint, dataset, cfg=None):
    return json.loads(_core.evaluate_checkpoint(str(checkpoint), str(dataset), _text(cfg)))


def evaluate_predictions(pred_dir, dataset, cfg=None):
    return json.loads(_core.evaluate_predictions(str(pred_dir), str(dataset), _text(cfg)))
