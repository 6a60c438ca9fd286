"""Contact and separation localization in egocentric RGB-D video."""

import json as _json

from ._core import (
    TilError,
    anchor_candidates,
    build_segments,
    fallback_uniform,
    greedy_frames,
    iou,
    mof,
    sampling_weights,
    score_video,
    smooth_speeds,
    speed_minima,
    threshold_from_distances,
)
from . import _core


def localize_scripted(manifest, script, **options):
    """Run the full pipeline with scripted replies; `script` is a dict or JSON text."""
    text = script if isinstance(script, str) else _json.dumps(script)
    return _json.loads(_core.localize_scripted_json(str(manifest), text, **options))


def dynamics(manifest, **options):
    return _json.loads(_core.dynamics_json(str(manifest), **options))


__all__ = [
    "TilError",
    "anchor_candidates",
    "build_segments",
    "dynamics",
    "fallback_uniform",
    "greedy_frames",
    "iou",
    "localize_scripted",
    "mof",
    "sampling_weights",
    "score_video",
    "smooth_speeds",
    "speed_minima",
    "threshold_from_distances",
]
