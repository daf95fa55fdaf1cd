"""Point-file ingestion and the ``modescope/1`` result document.

Result documents are JSON objects with sorted keys:

``schema``     always ``"modescope/1"``
``kind``       ``local_test``, ``map``, ``detect_modes``, ``calibrate``,
               ``simulate``, ``univariate`` or ``generic``
``config``     echo of every parameter needed to rerun the computation
``seed``       the seed of the stochastic steps (``null`` if none ran)
``kappa``      critical constant with its simulation metadata, or ``null``
``decisions``  per-wedge records ``vertex, direction, N, T, threshold,
               verdict, scale`` (``scale`` is the subsection ``[j, k]``)
``modes``      detected modes ``{"vertex": [...], "precision": mesh}``
``payload``    kind-specific extras (tables, grid, layout, ...)

Non-finite floats are written as JSON ``Infinity``/``NaN`` tokens, which the
standard library reads back unchanged.
"""
from __future__ import annotations

import json
import re
from dataclasses import is_dataclass
from pathlib import Path

import numpy as np

from .errors import DataParseError, InvalidInputError
from .inference import ModeDetection, ModeTestResult, MonotonicityMap, WedgeDecision
from .nullsim import NullQuantile

SCHEMA = "modescope/1"
_SPLIT = re.compile(r"[,\s]+")


def _cells(line: str) -> list:
    return [c for c in _SPLIT.split(line.strip()) if c]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def parse_points(path) -> np.ndarray:
    """Read comma- or whitespace-separated numeric rows into an ``(n, d)`` array.

    Blank lines and lines starting with ``#`` are ignored; the first data
    line is treated as a header when it contains a non-numeric token.
    """
    path = Path(path)
    if not path.exists():
        raise DataParseError(f"no such file: {path}")
    rows, d, seen_data = [], None, False
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cells = _cells(line)
            if not seen_data:
                seen_data = True
                if not all(_is_number(c) for c in cells):
                    continue
            try:
                values = [float(c) for c in cells]
            except ValueError:
                bad = next(c for c in cells if not _is_number(c))
                raise DataParseError(f"non-numeric cell {bad!r}", lineno) from None
            if not all(np.isfinite(values)):
                raise DataParseError("non-finite value", lineno)
            if d is None:
                d = len(values)
            elif len(values) != d:
                raise DataParseError(f"expected {d} columns, found {len(values)}", lineno)
            rows.append(values)
    if not rows:
        raise DataParseError("file contains no data rows", 1)
    return np.array(rows, dtype=np.float64)


def _encode(obj):
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    if is_dataclass(obj):
        return {k: getattr(obj, k) for k in obj.__dataclass_fields__}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _plain(obj):
    # round-trip through the encoder so the document holds only JSON types
    return json.loads(json.dumps(obj, default=_encode))


def _mode_entry(vertex, mesh) -> dict:
    return {"vertex": np.asarray(vertex, dtype=float).tolist(), "precision": mesh}


def to_document(result, config: dict | None = None, seed: int | None = None, kind: str | None = None) -> dict:
    """Structured representation of a library result."""
    decisions, modes, payload, kappa = [], [], {}, None
    if isinstance(result, ModeTestResult):
        kind = kind or "local_test"
        decisions = [w.to_dict() for w in result.per_wedge]
        modes = [_mode_entry(result.x0, None)] if result.mode_detected else []
        kappa = result.kappa
        payload = {"x0": np.asarray(result.x0).tolist(), "mode_detected": result.mode_detected}
    elif isinstance(result, MonotonicityMap):
        kind = kind or "map"
        decisions = [w.to_dict() for w in result.decisions]
        kappa = result.kappa
        payload = {"grid": _grid(result.grid), "layout": result.layout.to_dict(), "alpha": result.alpha,
                   "use_subsections": result.use_subsections}
    elif isinstance(result, ModeDetection):
        kind = kind or "detect_modes"
        for _, res in result.modes:
            decisions.extend(w.to_dict() for w in res.per_wedge)
        modes = [_mode_entry(v, result.precision) for v, _ in result.modes]
        kappa = result.kappa
        payload = {"grid": _grid(result.grid), "layout": result.layout.to_dict(), "alpha": result.alpha}
    elif isinstance(result, NullQuantile):
        kind = kind or "calibrate"
        kappa = result
    else:
        kind = kind or "generic"
        payload = result
    return _plain({
        "schema": SCHEMA, "kind": kind, "config": config or {}, "seed": seed,
        "kappa": kappa, "decisions": decisions, "modes": modes, "payload": payload,
    })


def _grid(grid) -> dict:
    return {"lower": grid.lower.tolist(), "upper": grid.upper.tolist(), "mesh": grid.mesh,
            "shape": list(grid.shape)}


def dumps(document: dict) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def write_results(result, path, config: dict | None = None, seed: int | None = None,
                  kind: str | None = None) -> dict:
    """Write ``result`` as a ``modescope/1`` document; returns the document."""
    doc = result if isinstance(result, dict) and result.get("schema") == SCHEMA else \
        to_document(result, config, seed, kind)
    text = dumps(doc)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot write results to {path}: {exc}") from exc
    return doc


def read_results(path) -> dict:
    """Load a result document; ``decisions`` come back as ``WedgeDecision`` objects."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataParseError(f"cannot read result document: {exc}") from exc
    if doc.get("schema") != SCHEMA:
        raise DataParseError(f"unsupported schema {doc.get('schema')!r}")
    doc["decisions"] = [WedgeDecision.from_dict(w) for w in doc["decisions"]]
    return doc
