"""File formats: ratings triplets, edge lists, factor matrices, flat
key-value configs and run summaries.

All text formats are line-oriented UTF-8.  Triplet and edge-list writers
emit canonical sorted order so write-then-read round-trips byte-for-byte.
"""

from __future__ import annotations

from dataclasses import fields

import numpy as np

from .errors import ConfigError, DataFormatError
from .sparse import GraphSI, ObservationSet, graph_from_edges, observation_set

FACTOR_MAGIC = b"GMF1"


def read_triplets(path, index_base=0):
    """Parse `row col value` lines (whitespace or comma separated).

    Dimensions come from an optional `# dims N M` header, else max index
    plus one.  `index_base` shifts indices down (1 for one-based files).
    Malformed lines and duplicate (i, j) pairs raise DataFormatError with
    the offending line number.
    """
    rows, cols, vals = [], [], []
    dims = None
    seen = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["dims"]:
                    if len(parts) != 3:
                        raise DataFormatError(
                            f"{path}:{lineno}: malformed dims header")
                    try:
                        dims = (int(parts[1]), int(parts[2]))
                    except ValueError:
                        raise DataFormatError(
                            f"{path}:{lineno}: malformed dims header") from None
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 3:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'row col value'")
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'row col value'") from None
            i -= index_base
            j -= index_base
            if i < 0 or j < 0:
                raise DataFormatError(
                    f"{path}:{lineno}: index below the declared base")
            if (i, j) in seen:
                raise DataFormatError(
                    f"{path}:{lineno}: duplicate entry ({i}, {j}) "
                    f"first seen at line {seen[(i, j)]}")
            seen[(i, j)] = lineno
            rows.append(i)
            cols.append(j)
            vals.append(v)
    if dims is None:
        dims = ((max(rows) + 1, max(cols) + 1) if rows else (0, 0))
    elif rows and (max(rows) >= dims[0] or max(cols) >= dims[1]):
        raise DataFormatError(
            f"{path}: entry index exceeds the declared dims {dims}")
    return observation_set(np.array(rows, dtype=np.int64),
                           np.array(cols, dtype=np.int64),
                           np.array(vals, dtype=np.float64), dims)


def write_triplets(obs: ObservationSet, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# dims {obs.n_rows} {obs.n_cols}\n")
        for i, j, v in zip(obs.rows.tolist(), obs.cols.tolist(),
                           obs.values.tolist()):
            fh.write(f"{i} {j} {v!r}\n")


def read_edge_list(path, n_nodes=None, gamma=1.0) -> GraphSI:
    """Parse `i j` lines into graph side information.

    Node count comes from `n_nodes`, else an optional `# nodes N` header,
    else max index plus one.  Weighted (3-token) lines are rejected; the
    adjacency is unweighted by contract.
    """
    edges = []
    header_nodes = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["nodes"]:
                    if len(parts) != 2:
                        raise DataFormatError(
                            f"{path}:{lineno}: malformed nodes header")
                    try:
                        header_nodes = int(parts[1])
                    except ValueError:
                        raise DataFormatError(
                            f"{path}:{lineno}: malformed nodes header") from None
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'i j' (weighted edges are "
                    f"not supported)")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}: expected integer node indices") from None
    if n_nodes is None:
        n_nodes = header_nodes
    if n_nodes is None:
        if not edges:
            raise DataFormatError(f"{path}: empty edge list without a "
                                  f"'# nodes N' header")
        n_nodes = int(max(max(i, j) for i, j in edges)) + 1
    return graph_from_edges(edges, n_nodes, gamma)


def write_edge_list(graph, path):
    """Write the canonical sorted edge list of a GraphSI or adjacency."""
    adj = graph.adjacency if isinstance(graph, GraphSI) else graph
    rows = np.repeat(np.arange(adj.n_rows, dtype=np.int64), np.diff(adj.indptr))
    upper = adj.indices > rows
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes {adj.n_rows}\n")
        for i, j in zip(rows[upper].tolist(), adj.indices[upper].tolist()):
            fh.write(f"{i} {j}\n")


def write_factors(path, X, text=False):
    """Persist a factor matrix; binary by default, text for debugging.

    Binary layout: magic "GMF1", endian tag "<", then n and d as uint64
    and the values as little-endian float64, row-major.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataFormatError("factor matrix must be 2-d")
    if text:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# factors {X.shape[0]} {X.shape[1]}\n")
            for row in X:
                fh.write(" ".join(repr(v) for v in row.tolist()) + "\n")
        return
    with open(path, "wb") as fh:
        fh.write(FACTOR_MAGIC)
        fh.write(b"<")
        fh.write(np.array(X.shape, dtype="<u8").tobytes())
        fh.write(X.astype("<f8", copy=False).tobytes())


def read_factors(path, text=False):
    if text:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if header[:2] != ["#", "factors"] or len(header) != 4:
                raise DataFormatError(f"{path}: missing factor header")
            try:
                n, d = int(header[2]), int(header[3])
            except ValueError:
                raise DataFormatError(f"{path}: malformed factor header") from None
            out = np.empty((n, d))
            for r in range(n):
                parts = fh.readline().split()
                if len(parts) != d:
                    raise DataFormatError(f"{path}: row {r} has {len(parts)} "
                                          f"values, expected {d}")
                out[r] = [float(p) for p in parts]
            return out
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != FACTOR_MAGIC:
        raise DataFormatError(f"{path}: not a factor file (bad magic)")
    if blob[4:5] != b"<":
        raise DataFormatError(f"{path}: unsupported byte order tag")
    if len(blob) < 21:
        raise DataFormatError(f"{path}: truncated factor header")
    n, d = (int(v) for v in np.frombuffer(blob[5:21], dtype="<u8"))
    expected = 21 + 8 * n * d
    if len(blob) != expected:
        raise DataFormatError(f"{path}: expected {expected} bytes, "
                              f"found {len(blob)}")
    return np.frombuffer(blob[21:], dtype="<f8").reshape(n, d).copy()


def read_config(path):
    """Flat `key = value` lines into a string-valued dict."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            out[key] = value
    return out


def _format_value(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_summary(path, mapping):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {_format_value(value)}\n")


def _coerce(raw, target_type, key):
    if target_type is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {key!r}: expected a boolean, "
                          f"got {raw!r}")
    try:
        return target_type(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as "
                          f"{target_type.__name__}") from None


def build_config(cls, file_values=None, overrides=None):
    """Construct a config dataclass from defaults, then a parsed config
    file, then explicit overrides (None values skipped)."""
    allowed = {f.name: type(f.default) for f in fields(cls)}
    merged = {}
    for key, raw in (file_values or {}).items():
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} for "
                              f"{cls.__name__}")
        merged[key] = _coerce(raw, allowed[key], key)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in allowed:
            raise ConfigError(f"unknown override {key!r} for {cls.__name__}")
        merged[key] = allowed[key](value)
    return cls(**merged)
