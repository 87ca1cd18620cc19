"""l_p norms, distances, and norm-equivalence checks.

Everything downstream (projections, the subspace index, the brute-force
oracle) measures length with these functions.  The Chebyshev norm is a
distinct case, never approximated by a large finite exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NormOrder",
    "L1",
    "L2",
    "L4",
    "LINF",
    "as_norm_order",
    "lp_norm",
    "lp_distance",
    "distances_to_point",
    "check_norm_equivalence",
]


@dataclass(frozen=True)
class NormOrder:
    """Exponent of an l_p norm; ``p = math.inf`` selects the Chebyshev norm."""

    p: float

    def __post_init__(self) -> None:
        if isinstance(self.p, bool) or not isinstance(self.p, (int, float)):
            raise ValueError(f"norm order must be a number, got {self.p!r}")
        object.__setattr__(self, "p", float(self.p))
        if math.isnan(self.p) or self.p < 1.0:
            raise ValueError(f"norm order must satisfy p >= 1, got {self.p}")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.p)

    @property
    def dual(self) -> "NormOrder":
        """Dual exponent p* with 1/p + 1/p* = 1 (p=1 <-> p=inf)."""
        if self.is_infinite:
            return NormOrder(1.0)
        if self.p == 1.0:
            return NormOrder(math.inf)
        return NormOrder(self.p / (self.p - 1.0))

    def label(self) -> str:
        """Short printable form: "1", "2", "4", "inf", "2.5", ..."""
        if self.is_infinite:
            return "inf"
        if self.p == int(self.p):
            return str(int(self.p))
        return repr(self.p)

    def __str__(self) -> str:
        return f"l_{self.label()}"


L1 = NormOrder(1.0)
L2 = NormOrder(2.0)
L4 = NormOrder(4.0)
LINF = NormOrder(math.inf)


def as_norm_order(p) -> NormOrder:
    """Coerce a NormOrder, number, or string like "2" / "inf" to NormOrder."""
    if isinstance(p, NormOrder):
        return p
    if isinstance(p, str):
        text = p.strip().lower()
        if text in ("inf", "infinity", "oo"):
            return LINF
        return NormOrder(float(text))
    return NormOrder(p)


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a nonempty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite components")
    return arr


def _norm_1d(arr: np.ndarray, norm: NormOrder) -> float:
    a = np.abs(arr)
    if norm.is_infinite:
        return float(a.max())
    p = norm.p
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(np.sqrt(np.dot(arr, arr)))
    # max-factoring keeps |x_i|**p in range for large p / large components
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return m * float(np.sum((a / m) ** p)) ** (1.0 / p)


def lp_norm(v, p) -> float:
    """(sum |x_i|^p)^(1/p) for finite p; max |x_i| for the Chebyshev norm."""
    return _norm_1d(_as_vector(v), as_norm_order(p))


def lp_distance(x, y, p) -> float:
    """l_p distance between two vectors of equal dimension."""
    xv = _as_vector(x)
    yv = _as_vector(y)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    return _norm_1d(xv - yv, as_norm_order(p))


def distances_to_point(rows: np.ndarray, y: np.ndarray, norm: NormOrder) -> np.ndarray:
    """l_p distance from each row of ``rows`` to ``y``, vectorized.

    Inputs are assumed validated (finite, matching dims); this is the hot
    kernel behind scans and cascade levels.
    """
    diff = np.abs(rows - y)
    if norm.is_infinite:
        return diff.max(axis=1)
    p = norm.p
    if p == 1.0:
        return diff.sum(axis=1)
    if p == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    m = diff.max(axis=1)
    safe = np.where(m > 0.0, m, 1.0)
    out = safe * np.sum((diff / safe[:, None]) ** p, axis=1) ** (1.0 / p)
    return np.where(m > 0.0, out, 0.0)


def check_norm_equivalence(v, q, p, rel_tol: float = 1e-9) -> bool:
    """True iff ||v||_p <= ||v||_q <= m^(1/q - 1/p) * ||v||_p within rel_tol.

    Requires q < p (q finite; p finite or infinite, with 1/inf taken as 0).
    A property-test helper; the query path never calls this.
    """
    qn = as_norm_order(q)
    pn = as_norm_order(p)
    if qn.is_infinite or not qn.p < pn.p:
        raise ValueError(f"need finite q < p, got q={qn}, p={pn}")
    vec = _as_vector(v)
    m = vec.shape[0]
    norm_p = _norm_1d(vec, pn)
    norm_q = _norm_1d(vec, qn)
    inv_p = 0.0 if pn.is_infinite else 1.0 / pn.p
    factor = m ** (1.0 / qn.p - inv_p)
    scale = max(norm_p, norm_q, 1.0)
    slack = rel_tol * scale
    return norm_p <= norm_q + slack and norm_q <= factor * norm_p + slack
