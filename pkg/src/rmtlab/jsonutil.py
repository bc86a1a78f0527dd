"""JSON helpers shared by reports and the CLI."""
from __future__ import annotations

import math

import numpy as np


def sanitize(x):
    """JSON-ready copy: numpy scalars/arrays to Python, non-finite floats to None,
    complex numbers to ``[re, im]``."""
    if isinstance(x, dict):
        return {str(k): sanitize(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [sanitize(v) for v in x]
    if isinstance(x, np.ndarray):
        return sanitize(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (complex, np.complexfloating)):
        return [sanitize(x.real), sanitize(x.imag)]
    return x
