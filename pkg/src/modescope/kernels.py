"""Backend selection for the subsection-scan kernels.

The compiled extension ``modescope._core`` is used when it was built;
otherwise the numpy implementation in ``modescope._fallback`` is used.
Both produce bit-identical results, so the choice only affects speed.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager

import numpy as np

from . import _fallback

log = logging.getLogger(__name__)

try:
    from . import _core
except ImportError:  # extension not built
    _core = None
    log.debug("modescope._core not available; using numpy kernels")

BACKENDS = {"python": _fallback}
if _core is not None:
    BACKENDS["compiled"] = _core

_active = _core if _core is not None else _fallback


def backend_name() -> str:
    return "compiled" if _active is _core and _core is not None else "python"


def set_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}")
    _active = BACKENDS[name]


@contextmanager
def use_backend(name: str):
    previous = backend_name()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _spans(spans):
    return None if spans is None else np.ascontiguousarray(spans, dtype=np.int64)


def scan_max(a, scale, penalty, spans=None):
    """Maximum normalized pair statistic of a sorted array.

    Returns ``(z, j, k)``; ``z`` is ``-inf`` when no admissible pair exists.
    ``spans=None`` means every span ``2 .. len(a) - 1``.
    """
    z, j, k = _active.scan_max(_f64(a), _f64(scale), _f64(penalty), _spans(spans))
    return float(z), int(j), int(k)


def scan_max_rows(A, scale, penalty, spans=None):
    return np.asarray(_active.scan_max_rows(_f64(A), _f64(scale), _f64(penalty), _spans(spans)))


def scan_exceed(a, scale, penalty, level, spans=None):
    """Pairs whose normalized statistic exceeds ``level``, sorted by ``(j, k)``."""
    j, k, t = _active.scan_exceed(_f64(a), _f64(scale), _f64(penalty), float(level), _spans(spans))
    order = np.lexsort((k, j))
    return np.asarray(j)[order], np.asarray(k)[order], np.asarray(t)[order]
