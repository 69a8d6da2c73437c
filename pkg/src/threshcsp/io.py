"""File formats: canonical JSON, instance JSON, graph text, matrix text.

All emitted files are byte-stable: sorted keys, LF line endings, ASCII,
floats printed with 17 significant digits (exact round-trip).
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .instances import CspInstance, normalize_edges


class FileFormatError(ValueError):
    """Raised when an input file cannot be parsed or fails validation."""


# ---------------------------------------------------------------------------
# canonical JSON


def _fmt(value, out):
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        x = float(value)
        if not math.isfinite(x):
            raise ValueError(f"non-finite float in canonical JSON: {x!r}")
        out.append(f"{x:.17g}")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=True))
    elif isinstance(value, dict):
        out.append("{")
        for idx, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key: {key!r}")
            if idx:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _fmt(value[key], out)
        out.append("}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        out.append("[")
        items = value.tolist() if isinstance(value, np.ndarray) else value
        for idx, item in enumerate(items):
            if idx:
                out.append(",")
            _fmt(item, out)
        out.append("]")
    else:
        raise TypeError(f"unsupported type for canonical JSON: {type(value)!r}")


def canonical_dumps(obj) -> str:
    """Serialize to canonical JSON text (no trailing newline)."""
    out: list[str] = []
    _fmt(obj, out)
    return "".join(out)


def write_json(path: str, obj) -> None:
    text = canonical_dumps(obj) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# instance JSON


def instance_to_dict(instance: CspInstance) -> dict:
    edges = []
    for u, v, allowed in sorted(instance.edges, key=lambda e: (e[0], e[1])):
        edges.append({"u": int(u), "v": int(v), "allowed": sorted([int(a), int(b)] for a, b in allowed)})
    return {"n": int(instance.n), "q": int(instance.q), "edges": edges}


def instance_from_dict(data, source: str = "<dict>") -> CspInstance:
    if not isinstance(data, dict):
        raise FileFormatError(f"{source}: expected a JSON object at top level")
    for key in ("n", "q", "edges"):
        if key not in data:
            raise FileFormatError(f"{source}: missing field {key!r}")
    n, q = data["n"], data["q"]
    if not isinstance(n, int) or not isinstance(q, int):
        raise FileFormatError(f"{source}: fields 'n' and 'q' must be integers")
    edges = []
    for pos, entry in enumerate(data["edges"]):
        if not isinstance(entry, dict) or not {"u", "v", "allowed"} <= set(entry):
            raise FileFormatError(f"{source}: edges[{pos}] must have fields u, v, allowed")
        u, v = entry["u"], entry["v"]
        if not isinstance(u, int) or not isinstance(v, int):
            raise FileFormatError(f"{source}: edges[{pos}]: u, v must be integers")
        allowed = set()
        for pair in entry["allowed"]:
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise FileFormatError(f"{source}: edges[{pos}]: allowed entries must be pairs")
            allowed.add((int(pair[0]), int(pair[1])))
        edges.append((u, v, allowed))
    return CspInstance(n=n, q=q, edges=normalize_edges(edges))


def load_instance(path: str) -> CspInstance:
    return instance_from_dict(read_json(path), source=path)


def save_instance(path: str, instance: CspInstance) -> None:
    write_json(path, instance_to_dict(instance))


# ---------------------------------------------------------------------------
# MAX-CUT graph text format: first line "n m", then one "u v" per line


def load_graph(path: str) -> tuple[int, list[tuple[int, int]]]:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    body = [ln for ln in lines if ln.strip()]
    if not body:
        raise FileFormatError(f"{path}: empty graph file")
    head = body[0].split()
    if len(head) != 2:
        raise FileFormatError(f"{path}:1: expected header 'n m'")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError as exc:
        raise FileFormatError(f"{path}:1: non-integer header") from exc
    edges = []
    for lineno, line in enumerate(body[1:], start=2):
        parts = line.split()
        if len(parts) != 2:
            raise FileFormatError(f"{path}:{lineno}: expected 'u v'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise FileFormatError(f"{path}:{lineno}: non-integer vertex id") from exc
        if not (0 <= u < n and 0 <= v < n):
            raise FileFormatError(f"{path}:{lineno}: vertex id out of range [0, {n})")
        if u == v:
            raise FileFormatError(f"{path}:{lineno}: self-loop {u}")
        edges.append((min(u, v), max(u, v)))
    if len(edges) != m:
        raise FileFormatError(f"{path}: header claims {m} edges, found {len(edges)}")
    if len(set(edges)) != len(edges):
        raise FileFormatError(f"{path}: duplicate edge present")
    return n, edges


def save_graph(path: str, n: int, edges) -> None:
    edges = sorted((min(u, v), max(u, v)) for u, v in edges)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{n} {len(edges)}\n")
        for u, v in edges:
            fh.write(f"{u} {v}\n")


# ---------------------------------------------------------------------------
# dense symmetric matrix text format: first line "n", then n rows of n entries


def load_matrix(path: str) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise FileFormatError(f"{path}: empty matrix file")
    try:
        n = int(lines[0].split()[0])
    except ValueError as exc:
        raise FileFormatError(f"{path}:1: expected matrix dimension") from exc
    if len(lines) != n + 1:
        raise FileFormatError(f"{path}: expected {n} rows, found {len(lines) - 1}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != n:
            raise FileFormatError(f"{path}:{lineno}: expected {n} entries")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FileFormatError(f"{path}:{lineno}: non-numeric entry") from exc
    mat = np.array(rows, dtype=np.float64)
    if not np.isfinite(mat).all():
        raise FileFormatError(f"{path}: non-finite entry")
    return mat


def save_matrix(path: str, mat: np.ndarray) -> None:
    mat = np.asarray(mat, dtype=np.float64)
    n = mat.shape[0]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{n}\n")
        for row in mat:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def ensure_parent_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
