"""Per-block 1-Lipschitz scalar features.

A level splits R^n into f contiguous blocks of size m and maps each block
to one signed scalar: either the block mean scaled by m^(1/p) (the fixed
"orthogonal" feature, exact length of the rank-1 mean projection), or the
inner product with a fitted unit direction divided by a dual-norm scale
(the "adaptive" feature).  Both satisfy |feature(x) - feature(y)| <=
||x - y||_p per block, which makes the full level a contraction under any
l_p and is what lets the index prune without false dismissals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceAccumulator, first_principal_component
from .norms import NormOrder, as_norm_order, lp_norm

__all__ = [
    "ORTHOGONAL",
    "ADAPTIVE",
    "BlockPartition",
    "BlockProjector",
    "ProjectionLevel",
    "orthogonal_feature",
    "adaptive_feature",
    "project_level",
    "project_rows",
    "diversion",
    "q_mapping_norm",
    "orthogonal_level",
    "fit_adaptive_level",
]

ORTHOGONAL = "orthogonal"
ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class BlockPartition:
    """Split of an n-dimensional space into contiguous equal blocks."""

    dim_in: int
    block_count: int
    block_size: int

    def __post_init__(self) -> None:
        if self.dim_in < 1 or self.block_count < 1 or self.block_size < 1:
            raise ValueError("partition dimensions must be positive")
        if self.dim_in != self.block_count * self.block_size:
            raise ValueError(
                f"dim_in {self.dim_in} != block_count {self.block_count}"
                f" * block_size {self.block_size}"
            )

    @classmethod
    def for_dims(cls, dim_in: int, dim_out: int) -> "BlockPartition":
        """Partition mapping dim_in features onto dim_out block scalars."""
        if dim_out < 1 or dim_in % dim_out != 0:
            raise ValueError(f"{dim_in} is not divisible by {dim_out}")
        return cls(dim_in=dim_in, block_count=dim_out, block_size=dim_in // dim_out)


def _coefficient(block_size: int, norm: NormOrder) -> float:
    """Feature scale c = m^(1/p); 1 for the Chebyshev norm."""
    if norm.is_infinite:
        return 1.0
    return float(block_size) ** (1.0 / norm.p)


@dataclass(frozen=True)
class BlockProjector:
    """One block's scalar feature map.

    Orthogonal projectors carry no parameters.  Adaptive projectors carry a
    unit direction and the Lipschitz scale max(1, ||direction||_p*) that
    keeps the feature non-expansive under the level's norm.
    """

    mode: str
    direction: np.ndarray | None = None
    lipschitz_scale: float = 1.0
    converged: bool = True

    def __post_init__(self) -> None:
        if self.mode not in (ORTHOGONAL, ADAPTIVE):
            raise ValueError(f"unknown projector mode {self.mode!r}")
        if self.mode == ORTHOGONAL:
            if self.direction is not None:
                raise ValueError("orthogonal projectors carry no direction")
            return
        if self.direction is None:
            raise ValueError("adaptive projectors need a direction")
        direction = np.asarray(self.direction, dtype=np.float64)
        object.__setattr__(self, "direction", direction)
        if abs(float(np.linalg.norm(direction)) - 1.0) > 1e-9:
            raise ValueError("adaptive direction must have unit l_2 norm")
        if self.lipschitz_scale < 1.0:
            raise ValueError("lipschitz_scale must be >= 1")

    @classmethod
    def adaptive(cls, direction, norm, converged: bool = True) -> "BlockProjector":
        """Adaptive projector for a given direction under a given norm."""
        direction = np.asarray(direction, dtype=np.float64)
        scale = max(1.0, lp_norm(direction, as_norm_order(norm).dual))
        return cls(mode=ADAPTIVE, direction=direction, lipschitz_scale=scale,
                   converged=converged)


@dataclass(frozen=True)
class ProjectionLevel:
    """One cascade stage: f block projectors sharing a mode and a norm."""

    partition: BlockPartition
    projectors: tuple[BlockProjector, ...]
    norm: NormOrder

    def __post_init__(self) -> None:
        if len(self.projectors) != self.partition.block_count:
            raise ValueError(
                f"{len(self.projectors)} projectors for "
                f"{self.partition.block_count} blocks"
            )
        modes = {proj.mode for proj in self.projectors}
        if len(modes) != 1:
            raise ValueError("all projectors in a level must share one mode")
        # stacked copies drive the vectorized row kernels
        directions = scales = None
        if self.mode == ADAPTIVE:
            directions = np.stack([proj.direction for proj in self.projectors])
            scales = np.array([proj.lipschitz_scale for proj in self.projectors])
        object.__setattr__(self, "_directions", directions)
        object.__setattr__(self, "_scales", scales)

    @property
    def mode(self) -> str:
        return self.projectors[0].mode

    @property
    def dim_in(self) -> int:
        return self.partition.dim_in

    @property
    def dim_out(self) -> int:
        return self.partition.block_count

    def diversions(self) -> np.ndarray:
        """Per-block diversion diagnostics; exactly zero in orthogonal mode."""
        if self.mode == ORTHOGONAL:
            return np.zeros(self.partition.block_count)
        m = self.partition.block_size
        return np.array([diversion(proj, m) for proj in self.projectors])


def orthogonal_feature(block, p) -> float:
    """Signed scalar m^(1/p) * mean(block); equals ±||P block||_p in magnitude."""
    arr = np.asarray(block, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("block must be a nonempty vector")
    return _coefficient(arr.size, as_norm_order(p)) * float(arr.mean())


def adaptive_feature(block, projector: BlockProjector) -> float:
    """Signed scalar <direction, block> / lipschitz_scale."""
    if projector.mode != ADAPTIVE:
        raise ValueError("adaptive_feature requires an adaptive projector")
    arr = np.asarray(block, dtype=np.float64)
    if arr.shape != projector.direction.shape:
        raise ValueError(
            f"block dim {arr.shape} != direction dim {projector.direction.shape}"
        )
    return float(arr @ projector.direction) / projector.lipschitz_scale


def project_level(x, level: ProjectionLevel) -> np.ndarray:
    """Map one vector of dim n to its f per-block features."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size != level.dim_in:
        raise ValueError(f"vector shape {arr.shape} != level input dim {level.dim_in}")
    return project_rows(arr[None, :], level)[0]


def project_rows(rows: np.ndarray, level: ProjectionLevel) -> np.ndarray:
    """Project each row of an (s, n) matrix to (s, f) features."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != level.dim_in:
        raise ValueError(f"rows shape {rows.shape} != level input dim {level.dim_in}")
    part = level.partition
    blocks = rows.reshape(rows.shape[0], part.block_count, part.block_size)
    if level.mode == ORTHOGONAL:
        return blocks.mean(axis=2) * _coefficient(part.block_size, level.norm)
    feats = np.einsum("sfm,fm->sf", blocks, level._directions)
    return feats / level._scales[None, :]


def diversion(projector: BlockProjector, m: int) -> float:
    """sqrt(m) - |<direction, ones>|: distance of the fitted direction from
    the m-secting line; 0 when the direction is the block mean's."""
    if projector.mode != ADAPTIVE:
        raise ValueError("diversion is defined for adaptive projectors "
                         "(orthogonal mode is identically 0)")
    if m != projector.direction.size:
        raise ValueError(f"m={m} != direction dim {projector.direction.size}")
    return math.sqrt(m) - abs(float(projector.direction.sum()))


def q_mapping_norm(m: int, p) -> float:
    """Induced operator norm m^((p-2)/p) of the l_p-normalized mean mapping.

    Exceeds 1 exactly when p > 2, where the mapping can inflate lengths; it
    is a diagnostic only and never participates in pruning.
    """
    norm = as_norm_order(p)
    if norm.is_infinite:
        raise ValueError("the mapping norm is undefined for the Chebyshev norm")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return float(m) ** ((norm.p - 2.0) / norm.p)


def orthogonal_level(partition: BlockPartition, norm) -> ProjectionLevel:
    """Level of parameter-free block-mean projectors."""
    projectors = tuple(BlockProjector(mode=ORTHOGONAL)
                       for _ in range(partition.block_count))
    return ProjectionLevel(partition=partition, projectors=projectors,
                           norm=as_norm_order(norm))


def fit_adaptive_level(rows: np.ndarray, partition: BlockPartition,
                       norm) -> ProjectionLevel:
    """Fit per-block directions to data and assemble an adaptive level.

    Each block's direction is the dominant eigenvector of its raw
    second-moment matrix (moment about the origin, not the centered
    covariance): features are inner products with raw vectors, so the
    direction that best preserves their length is the one carrying the most
    raw energy, mean included.  Blocks with zero moment fall back to the
    m-secting direction.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != partition.dim_in:
        raise ValueError(f"rows shape {rows.shape} != partition dim {partition.dim_in}")
    norm = as_norm_order(norm)
    m = partition.block_size
    projectors = []
    for j in range(partition.block_count):
        acc = CovarianceAccumulator(m)
        acc.add_rows(rows[:, j * m:(j + 1) * m])
        component = first_principal_component(acc.second_moment())
        projectors.append(BlockProjector.adaptive(
            component.direction, norm, converged=component.converged))
    return ProjectionLevel(partition=partition, projectors=tuple(projectors),
                           norm=norm)
