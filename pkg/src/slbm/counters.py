"""Logical work and traffic counters.

The engines count what an ideal gather/scatter machine would do: cells
visited per kernel call, distribution-value loads plus stores, adjacency
table reads, and values moved between blocks.  The counts feed the
analytic traffic model and the layout equivalence checks; they are not
wall-clock measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class Counters:
    steps: int = 0
    cells_visited: int = 0
    cells_visited_interior: int = 0
    cells_visited_frame: int = 0
    pdf_accesses: int = 0
    idx_reads: int = 0
    values_exchanged: int = 0
    messages: int = 0

    def add(self, other: "Counters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def copy(self) -> "Counters":
        return Counters(**{f.name: getattr(self, f.name) for f in fields(self)})

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}
