"""Full-scale reference results for the two canonical benchmark corpora.

The desk-scale benchmark harness works on synthetic stand-ins; these frozen
rows record what the method measures at full scale on the real datasets
(GIST-960 global descriptors, 100,000 vectors; and 9,876 RGB images
flattened to 12,288 dimensions, three 8-bit bands of 128 x 96 pixels).
They are reported alongside harness output when a supplied dataset matches
one of these shapes.  They are reference values only: the datasets are not
bundled, and the desk-scale suite is not expected to reproduce them.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ReferenceRow", "REFERENCE_TABLES", "reference_rows", "match_reference"]


@dataclass(frozen=True)
class ReferenceRow:
    mode: str
    norm: str
    epsilon: float       # calibrated for ~52 neighbors
    mean_cost: float
    mean_ratio: float


# GIST-960: schedule 960 > 480 > 240 > 120 > 60 > 30 > 10 > 5, s = 100,000,
# measured over a disjoint 400-query sample, l_2.
_GIST960 = (
    ReferenceRow(mode="orthogonal", norm="2", epsilon=6300.0,
                 mean_cost=4_584_277.0, mean_ratio=21.38),
    ReferenceRow(mode="adaptive", norm="2", epsilon=6300.0,
                 mean_cost=4_393_127.0, mean_ratio=22.31),
)

# RGB-12288: schedule 12288 > 768 > 48 > 12 per band, s = 9,876,
# measured over a disjoint 400-query sample.
_RGB12288 = (
    ReferenceRow(mode="orthogonal", norm="1", epsilon=1_240_000.0,
                 mean_cost=8_571_752.0, mean_ratio=42.47),
    ReferenceRow(mode="adaptive", norm="2", epsilon=8500.0,
                 mean_cost=10_343_766.0, mean_ratio=35.20),
    ReferenceRow(mode="orthogonal", norm="2", epsilon=8500.0,
                 mean_cost=10_386_043.0, mean_ratio=35.05),
    ReferenceRow(mode="orthogonal", norm="4", epsilon=825.0,
                 mean_cost=12_464_281.0, mean_ratio=29.32),
    ReferenceRow(mode="orthogonal", norm="inf", epsilon=161.0,
                 mean_cost=39_639_239.0, mean_ratio=9.19),
)

REFERENCE_TABLES = {
    "gist960": {"dim": 960, "count": 100_000, "rows": _GIST960},
    "rgb12288": {"dim": 12_288, "count": 9_876, "rows": _RGB12288},
}


def reference_rows(table: str) -> tuple[ReferenceRow, ...]:
    if table not in REFERENCE_TABLES:
        raise ValueError(f"unknown reference table {table!r}; "
                         f"available: {sorted(REFERENCE_TABLES)}")
    return REFERENCE_TABLES[table]["rows"]


def match_reference(dim: int, count: int) -> str | None:
    """Name of the reference table a dataset shape corresponds to, if any."""
    for name, table in REFERENCE_TABLES.items():
        if table["dim"] == dim and table["count"] == count:
            return name
    return None
