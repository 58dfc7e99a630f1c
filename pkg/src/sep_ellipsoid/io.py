"""Text formats: the matrix exchange document, manifests and reports.

A state file is a JSON document::

    {
      "dims": [2, 2, 2],
      "matrix": [
        [re, im],
        ...
      ]
    }

with the ``D*D`` entries listed row-major, every number written with 17
significant digits so that reading and rewriting a file reproduces it byte
for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .qmat import check_dims, hermitian


class FormatError(ValueError):
    """The document is not a valid matrix exchange file."""


def _num(x: float) -> str:
    x = float(x) + 0.0  # folds -0.0 into 0.0
    if not math.isfinite(x):
        raise FormatError("non-finite matrix entry")
    return format(x, ".17g")


def dumps_matrix(rho, dims: Sequence[int] | None) -> str:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise FormatError(f"expected a square matrix, got shape {rho.shape}")
    dims = [rho.shape[0]] if dims is None else list(check_dims(rho, dims))
    lines = ",\n".join(f"    [{_num(z.real)}, {_num(z.imag)}]" for z in rho.ravel())
    return '{\n  "dims": [' + ", ".join(str(d) for d in dims) + '],\n  "matrix": [\n' + lines + "\n  ]\n}\n"


def loads_matrix(text: str) -> tuple[np.ndarray, tuple[int, ...]]:
    """Parse a state document; returns the Hermitian matrix and its dims."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "dims" not in doc or "matrix" not in doc:
        raise FormatError("document needs 'dims' and 'matrix' fields")
    dims = doc["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise FormatError(f"bad dims {dims!r}")
    D = int(np.prod(dims))
    entries = doc["matrix"]
    if isinstance(entries, list) and len(entries) == D and all(
        isinstance(r, list) and len(r) == D and all(isinstance(e, list) for e in r) for r in entries
    ):
        entries = [e for row in entries for e in row]
    if not isinstance(entries, list) or len(entries) != D * D:
        raise FormatError(f"expected {D * D} matrix entries")
    try:
        arr = np.array(entries, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad matrix entries: {exc}") from exc
    if arr.shape != (D * D, 2) or not np.all(np.isfinite(arr)):
        raise FormatError("matrix entries must be finite [re, im] pairs")
    rho = (arr[:, 0] + 1j * arr[:, 1]).reshape(D, D)
    try:
        rho = hermitian(rho, dims)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return rho, tuple(dims)


def write_matrix(path, rho, dims) -> str:
    text = dumps_matrix(rho, dims)
    Path(path).write_text(text)
    return text


def read_matrix(path) -> tuple[np.ndarray, tuple[int, ...]]:
    return loads_matrix(Path(path).read_text())


def manifest_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".manifest.json")


def write_manifest(path, payload: dict) -> Path:
    out = manifest_path(path)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return out


def _finite_json(obj):
    # strict JSON has no infinities; spell them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _finite_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_json(v) for v in obj]
    return obj


def dumps_report(obj: dict) -> str:
    return json.dumps(_finite_json(obj), indent=2, allow_nan=False) + "\n"
