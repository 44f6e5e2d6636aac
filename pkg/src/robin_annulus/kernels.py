"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``ROBIN_ANNULUS_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

OK, NONPOSITIVE, NONFINITE = 0, 1, 2


def load_backend(name: str):
    if name == "compiled":
        return importlib.import_module("robin_annulus._ckernels")
    if name == "python":
        return importlib.import_module("robin_annulus._pykernels")
    raise ValueError(f"unknown kernel backend {name!r}")


if os.environ.get("ROBIN_ANNULUS_PURE_PYTHON", "") not in ("", "0"):
    _impl = load_backend("python")
    BACKEND = "python"
else:
    try:
        _impl = load_backend("compiled")
        BACKEND = "compiled"
    except ImportError:
        _impl = load_backend("python")
        BACKEND = "python"

shoot = _impl.shoot
min_segment_distance = _impl.min_segment_distance
