"""Streaming per-block covariance estimation and dominant eigenvector extraction.

A single-pass accumulator collects count/mean/comoment per block; the
dominant eigenpair of the finalized matrix parameterizes adaptive
projections.  Blocks are tiny (block size rarely above 16), so the
eigensolver favors robustness and determinism over asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CovarianceAccumulator",
    "PrincipalComponent",
    "first_principal_component",
]

_SQUARINGS = 48  # warm start covers spectral-gap ratios down to ~1e-14


class CovarianceAccumulator:
    """Single-pass mean/comoment accumulator for fixed-dimension samples.

    ``comoment`` is the running sum of outer products of centered samples,
    updated with the symmetric rank-1 scheme so it stays exactly symmetric.
    Accumulators are single-writer; parallel builds shard samples across
    accumulators and combine them with :meth:`merge`.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self.count = 0
        self.mean = np.zeros(self.dim)
        self.comoment = np.zeros((self.dim, self.dim))

    def add(self, sample) -> "CovarianceAccumulator":
        sample = np.asarray(sample, dtype=np.float64)
        if sample.shape != (self.dim,):
            raise ValueError(f"sample shape {sample.shape} != ({self.dim},)")
        self.count += 1
        delta = sample - self.mean
        self.mean += delta / self.count
        self.comoment += np.outer(delta, delta) * ((self.count - 1) / self.count)
        return self

    def add_rows(self, rows: np.ndarray) -> "CovarianceAccumulator":
        """Ingest every row of a 2-d array as one merged chunk.

        Equivalent to repeated :meth:`add` up to the usual 1e-9 relative
        reordering tolerance, but vectorized.
        """
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise ValueError(f"rows shape {rows.shape} incompatible with dim {self.dim}")
        if rows.shape[0] == 0:
            return self
        chunk = CovarianceAccumulator(self.dim)
        chunk.count = rows.shape[0]
        chunk.mean = rows.mean(axis=0)
        centered = rows - chunk.mean
        chunk.comoment = centered.T @ centered
        merged = self.merge(chunk)
        self.count = merged.count
        self.mean = merged.mean
        self.comoment = merged.comoment
        return self

    def merge(self, other: "CovarianceAccumulator") -> "CovarianceAccumulator":
        """Combine two shard accumulators into a fresh one (order-insensitive)."""
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        out = CovarianceAccumulator(self.dim)
        out.count = self.count + other.count
        if out.count == 0:
            return out
        delta = other.mean - self.mean
        out.mean = self.mean + delta * (other.count / out.count)
        out.comoment = (
            self.comoment
            + other.comoment
            + np.outer(delta, delta) * (self.count * other.count / out.count)
        )
        return out

    def finalize(self) -> np.ndarray:
        """Sample covariance, divisor count-1; a single sample yields zeros.

        PSD is spot-checked through Rayleigh quotients on deterministic
        probe vectors.
        """
        if self.count == 0:
            raise ValueError("cannot finalize an empty accumulator")
        cov = self.comoment / max(1, self.count - 1)
        tol = 1e-9 * max(1.0, float(np.trace(cov)))
        for probe in _probe_vectors(self.dim):
            if float(probe @ cov @ probe) < -tol:
                raise ValueError("accumulated comoment is not positive semidefinite")
        return cov

    def second_moment(self) -> np.ndarray:
        """Mean outer-product moment about the origin, E[x x^T] estimate.

        Unlike the covariance this keeps the mean direction, which is what a
        rank-1 projection of raw (uncentered) vectors should be fitted to.
        """
        if self.count == 0:
            raise ValueError("cannot finalize an empty accumulator")
        return self.comoment / self.count + np.outer(self.mean, self.mean)


def _probe_vectors(dim: int):
    yield np.ones(dim) / math.sqrt(dim)
    signs = np.ones(dim)
    signs[1::2] = -1.0
    yield signs / math.sqrt(dim)
    for j in range(min(dim, 4)):
        e = np.zeros(dim)
        e[j] = 1.0
        yield e


@dataclass(frozen=True)
class PrincipalComponent:
    """Dominant eigenpair: unit direction, nonnegative eigenvalue."""

    direction: np.ndarray
    eigenvalue: float
    converged: bool = True


def first_principal_component(
    cov,
    *,
    sym_tol: float = 1e-9,
    max_iterations: int = 10_000,
    step_tol: float = 1e-10,
) -> PrincipalComponent:
    """Dominant eigenpair of a symmetric PSD matrix by the power method.

    The iteration starts from the normalized all-ones vector (the fitting
    fallback for uncorrelated data) after a warm start of repeated
    normalized matrix squarings; squaring doubles the effective iteration
    count per step, so near-degenerate spectra converge within the
    iteration cap instead of stalling at linear rate.  The returned sign
    makes the component sum nonnegative (tie: first nonzero entry positive).
    """
    mat = np.asarray(cov, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix contains non-finite entries")
    scale = float(np.abs(mat).max())
    if float(np.abs(mat - mat.T).max()) > sym_tol * max(1.0, scale):
        raise ValueError("matrix is not symmetric within tolerance")
    m = mat.shape[0]
    start = np.ones(m) / math.sqrt(m)
    if scale == 0.0:
        return PrincipalComponent(direction=start, eigenvalue=0.0, converged=True)

    powered = mat / scale
    for _ in range(_SQUARINGS):
        powered = powered @ powered
        top = float(np.abs(powered).max())
        if top == 0.0 or not np.isfinite(top):
            break
        powered /= top
    vec = powered @ start
    norm = float(np.linalg.norm(vec))
    column_norms = np.linalg.norm(powered, axis=0)
    best_column = int(np.argmax(column_norms))
    if norm < 1e-3 * float(column_norms[best_column]):
        # start vector (numerically) orthogonal to the dominant space
        vec = powered[:, best_column]
        norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        vec = start.copy()
    else:
        vec = vec / norm

    converged = False
    for _ in range(max_iterations):
        nxt = mat @ vec
        norm = float(np.linalg.norm(nxt))
        if norm == 0.0:
            converged = True
            break
        nxt /= norm
        if float(nxt @ vec) < 0.0:
            nxt = -nxt
        if float(np.linalg.norm(nxt - vec)) < step_tol:
            vec = nxt
            converged = True
            break
        vec = nxt

    eigenvalue = max(float(vec @ mat @ vec), 0.0)
    total = float(vec.sum())
    if total < 0.0:
        vec = -vec
    elif total == 0.0:
        nonzero = np.nonzero(vec)[0]
        if nonzero.size and vec[nonzero[0]] < 0.0:
            vec = -vec
    return PrincipalComponent(direction=vec, eigenvalue=eigenvalue, converged=converged)
