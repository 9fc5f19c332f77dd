"""Coexpression networks from replicated expression measurements.

Within each replicate set, genes i and j are joined when the Fisher-transformed
Pearson correlation is significant after a Bonferroni correction over all
g(g-1)/2 pairs: sqrt(n - 3) |atanh(r)| > Phi^-1(1 - alpha_B / 2), with
alpha_B = fwer / (g(g-1)/2).  The per-test level alpha_B doubles as a nominal
type I error rate for the resulting network.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .errors import ConstantGene, InsufficientSamples
from .graph import AdjacencyMatrix


@dataclass(frozen=True)
class ExpressionMatrix:
    genes: tuple[str, ...]
    values: np.ndarray  # g x n
    samples: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("expression values must be a genes x samples matrix")
        if v.shape[0] != len(self.genes):
            raise ValueError(f"{len(self.genes)} gene labels for {v.shape[0]} rows")
        if v.shape[0] < 2:
            raise ValueError("need at least 2 genes")
        if not np.all(np.isfinite(v)):
            raise ValueError("expression matrix has missing or non-finite values; impute before use")
        object.__setattr__(self, "values", v)

    @property
    def g(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def read_expression_csv(path) -> ExpressionMatrix:
    """CSV with a header row (first cell ignored, then sample names) and one row per gene."""
    with Path(path).open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise ValueError(f"{path}: expected a header row and at least one gene row")
    header, body = rows[0], rows[1:]
    genes = tuple(r[0] for r in body)
    try:
        vals = np.array([[float(x) if x.strip() else np.nan for x in r[1:]] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric expression value ({exc})") from None
    return ExpressionMatrix(genes, vals, tuple(header[1:]))


def nominal_alpha(g: int, fwer: float = 0.05) -> float:
    """Bonferroni per-test level fwer / (g(g-1)/2); 0.05 / 11628 for 153 genes."""
    return fwer / (g * (g - 1) / 2)


def replicate_groups(n: int, n_replicates: int, layout: str = "blocked") -> list[list[int]]:
    """Column indices per replicate: consecutive blocks, or round-robin when interleaved."""
    if n_replicates < 1 or n % n_replicates:
        raise ValueError(f"{n} samples do not split evenly into {n_replicates} replicates")
    if layout == "blocked":
        size = n // n_replicates
        return [list(range(r * size, (r + 1) * size)) for r in range(n_replicates)]
    if layout == "interleaved":
        return [list(range(r, n, n_replicates)) for r in range(n_replicates)]
    raise ValueError(f"unknown layout {layout!r}; expected 'blocked' or 'interleaved'")


def coexpression_network(values, fwer: float = 0.05) -> AdjacencyMatrix:
    x = np.asarray(values, dtype=float)
    g, n = x.shape
    if n <= 3:
        raise InsufficientSamples(f"need at least 4 samples for the Fisher transform, got {n}")
    sd = x.std(axis=1)
    if np.any(sd == 0):
        bad = np.flatnonzero(sd == 0).tolist()
        raise ConstantGene(f"genes with zero variance (rows {bad}) have undefined correlation")
    r = np.clip(np.corrcoef(x), -1.0, 1.0)
    with np.errstate(divide="ignore"):
        z = np.arctanh(r)
    stat = np.sqrt(n - 3) * np.abs(z)
    thr = NormalDist().inv_cdf(1 - nominal_alpha(g, fwer) / 2)
    a = (stat > thr).astype(np.uint8)
    np.fill_diagonal(a, 0)
    # corrcoef is symmetric up to rounding; force exact symmetry
    a = np.maximum(a, a.T)
    return AdjacencyMatrix(a)


def coexpress(expr: ExpressionMatrix, groups: list[list[int]], fwer: float = 0.05) -> list[AdjacencyMatrix]:
    return [coexpression_network(expr.values[:, cols], fwer) for cols in groups]
