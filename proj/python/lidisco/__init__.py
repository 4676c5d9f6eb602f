"""Python interface to the lidisco library.

Parameters are plain dicts holding the same keys as the CLI JSON config files; missing
keys keep their defaults. Label sets are dicts mapping frame_id to a list of Box.
"""

import json

from ._lidisco import (
    Box,
    LidiscoError,
    Model,
    Sequence,
    bev_iou,
    canonicalize,
    fit_box,
    read_labels,
    read_sequence,
    write_labels,
    write_sequence,
)
from . import _lidisco

__all__ = [
    "Box", "LidiscoError", "Model", "Sequence", "autolabel", "bev_iou", "canonicalize", "default_params",
    "evaluate", "fit_box", "infer", "read_labels", "read_sequence", "self_train", "synthesize", "train",
    "write_labels", "write_sequence",
]


def _dump(params):
    return json.dumps(params) if params else ""


def default_params(kind):
    """Defaults for 'scene', 'pipeline', 'rounds' or 'eval'."""
    return json.loads(_lidisco.default_params(kind))


def synthesize(scene=None, threads=1):
    """Returns (sequence, ground_truth_labels)."""
    return _lidisco.synthesize(_dump(scene), threads)


def autolabel(sequence, params=None, threads=1):
    return _lidisco.autolabel(sequence, _dump(params), threads)


def train(sequence, labels, params=None, threads=1):
    return _lidisco.train(sequence, labels, _dump(params), threads)


def infer(sequence, model, params=None, threads=1):
    return _lidisco.infer(sequence, model, _dump(params), threads)


def self_train(sequence, rounds=None, threads=1):
    """Returns (labels per round, stop reason or None)."""
    return _lidisco.self_train(sequence, _dump(rounds), threads)


def evaluate(detections, ground_truth, sequence=None, params=None, dtc=False):
    """Evaluation report as a dict. DTC buckets need the sequence for ego poses."""
    return json.loads(_lidisco.evaluate(detections, ground_truth, sequence, _dump(params), dtc))
