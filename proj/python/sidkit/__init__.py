"""Python bindings for the sid synthetic-image detection toolkit."""

import json

from ._core import (
    SidError,
    apply_alteration,
    estimate_co2,
    extract_features,
    glcm_contrast,
    read_image,
    select_top_patches,
    version,
    vote,
)
from . import _core

__version__ = version()


def augment(image, policy="susy", *, seed, index=0):
    """Returns (altered image, applied alterations). `policy` is a preset
    name or an augmentation config dict."""
    text = json.dumps(policy)
    return _core.augment(image, text, seed, index)


def run(*args):
    """Runs one `sid` command in-process; returns (exit_code, stdout, stderr)."""
    return _core.run([str(a) for a in args])


__all__ = [
    "SidError",
    "apply_alteration",
    "augment",
    "estimate_co2",
    "extract_features",
    "glcm_contrast",
    "read_image",
    "run",
    "select_top_patches",
    "version",
    "vote",
]
