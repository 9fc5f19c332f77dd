"""Network file formats.

Edge list (``.edges`` / ``.txt``)::

    # optional comment lines, e.g. "# nominal_alpha=4.3e-06"
    p=15
    0 4
    2 7

Vertices are 0-based, each undirected pair listed once.  The ``p=`` header is
mandatory so isolated vertices survive a round trip.  Comment lines of the
form ``# key=value`` are returned as metadata.

Dense CSV: ``p`` rows of ``p`` comma-separated 0/1 values.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .graph import AdjacencyMatrix


class FormatError(ValueError):
    pass


def _is_csv(path: Path) -> bool:
    return path.suffix.lower() == ".csv"


def read_edge_list(path) -> tuple[AdjacencyMatrix, dict[str, str]]:
    path = Path(path)
    meta: dict[str, str] = {}
    p = None
    edges = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            if p is None:
                if not line.startswith("p="):
                    raise FormatError(f"{path}:{lineno}: expected 'p=<n>' header before edges")
                try:
                    p = int(line[2:])
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: bad vertex count {line!r}") from None
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            if not (0 <= u < p and 0 <= v < p):
                raise FormatError(f"{path}:{lineno}: vertex out of range 0..{p - 1}")
            if u == v:
                raise FormatError(f"{path}:{lineno}: self-loop {u}")
            edges.append((u, v))
    if p is None:
        raise FormatError(f"{path}: missing 'p=<n>' header")
    return AdjacencyMatrix.from_edges(p, edges), meta


def write_edge_list(path, graph: AdjacencyMatrix, meta: dict | None = None) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        fh.write(f"p={graph.p}\n")
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")


def read_dense_csv(path) -> AdjacencyMatrix:
    with Path(path).open(newline="") as fh:
        rows = [[int(x) for x in row] for row in csv.reader(fh) if row]
    return AdjacencyMatrix(np.array(rows))


def write_dense_csv(path, graph: AdjacencyMatrix) -> None:
    with Path(path).open("w", newline="") as fh:
        csv.writer(fh).writerows(graph.values.tolist())


def read_network(path) -> tuple[AdjacencyMatrix, dict[str, str]]:
    path = Path(path)
    if _is_csv(path):
        return read_dense_csv(path), {}
    return read_edge_list(path)


def write_network(path, graph: AdjacencyMatrix, meta: dict | None = None) -> None:
    path = Path(path)
    if _is_csv(path):
        write_dense_csv(path, graph)
    else:
        write_edge_list(path, graph, meta)
