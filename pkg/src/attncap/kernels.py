"""Kernel selection: compiled extension when importable, Python otherwise.

Set ``ATTNCAP_PURE=1`` to force the fallback (the benchmark and the
kernel-equivalence tests use :func:`load` directly).
"""

import importlib
import logging
import os

log = logging.getLogger(__name__)

__all__ = ["classify_stream", "box_majority", "gaussian_heatmap", "BACKEND", "load"]


def load(name):
    """Return the kernel module ``"compiled"`` or ``"python"``."""
    if name == "compiled":
        return importlib.import_module("attncap._kernels")
    if name == "python":
        return importlib.import_module("attncap._fallback")
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    if os.environ.get("ATTNCAP_PURE", "") not in ("", "0"):
        return load("python"), "python"
    try:
        return load("compiled"), "compiled"
    except ImportError:
        log.debug("compiled kernels unavailable, using pure-Python fallback")
        return load("python"), "python"


_impl, BACKEND = _select()
classify_stream = _impl.classify_stream
box_majority = _impl.box_majority
gaussian_heatmap = _impl.gaussian_heatmap
