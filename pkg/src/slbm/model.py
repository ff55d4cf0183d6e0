"""Analytic memory-traffic and memory-footprint models.

Closed-form per-cell byte counts for the four kernel variants (dense or
sparse storage, two-buffer pull or in-place alternating streaming), on a
cache-based host ("cpu", where two-buffer writes cost an extra
write-allocate access) and on an accelerator-style machine ("gpu", plain
read+write).  Also block footprint formulas, rooflines, break-even
porosities, and the integer workload weights used by the load balancer.

Everything returns exact Fractions or integers so tests can assert
equality rather than closeness; convert to float at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigurationError

ARCHS = ("cpu", "gpu")
STRUCTURES = ("dense", "sparse")
PATTERNS = ("pull", "aa")

#: Default storage sizes: double-precision distribution values and
#: 32-bit adjacency indices.
B_PDF = 8
B_IDX = 4

#: Per-cell scalar fields besides the distributions (velocity 3,
#: density 1, cell flag 1), all modeled at B_PDF granularity.
N_OTHER_FIELDS = 5


@dataclass(frozen=True)
class TrafficModel:
    arch: str
    structure: str
    pattern: str
    q: int
    b_pdf: int = B_PDF
    b_idx: int = B_IDX

    def __post_init__(self) -> None:
        if self.arch not in ARCHS:
            raise ConfigurationError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if self.structure not in STRUCTURES:
            raise ConfigurationError(
                f"structure must be one of {STRUCTURES}, got {self.structure!r}"
            )
        if self.pattern not in PATTERNS:
            raise ConfigurationError(
                f"pattern must be one of {PATTERNS}, got {self.pattern!r}"
            )
        if self.q < 1 or self.b_pdf <= 0 or self.b_idx <= 0:
            raise ConfigurationError("q, b_pdf, b_idx must be positive")


def bytes_per_cell(m: TrafficModel) -> Fraction:
    """Kernel memory traffic per visited cell, in bytes.

    Two-buffer pull on a cache host touches each distribution value three
    times (read src, write dst, write-allocate dst); everywhere else it
    is read+write.  Sparse kernels add the adjacency reads: Q-1 per cell
    for pull, and half that for the alternating pattern since only every
    second step consults the table.
    """
    if m.arch == "cpu" and m.pattern == "pull":
        pdf_accesses = 3 * m.q
    else:
        pdf_accesses = 2 * m.q
    if m.structure == "dense":
        idx_accesses = Fraction(0)
    elif m.pattern == "pull":
        idx_accesses = Fraction(m.q - 1)
    else:
        idx_accesses = Fraction(m.q - 1, 2)
    return pdf_accesses * m.b_pdf + idx_accesses * m.b_idx


def traffic_reduction(
    arch: str, structure: str, q: int, b_pdf: int = B_PDF, b_idx: int = B_IDX
) -> Fraction:
    """Relative traffic saved by the in-place pattern: 1 - aa/pull."""
    pull = bytes_per_cell(TrafficModel(arch, structure, "pull", q, b_pdf, b_idx))
    aa = bytes_per_cell(TrafficModel(arch, structure, "aa", q, b_pdf, b_idx))
    return 1 - Fraction(aa, pull)


def pdf_elements(n_fluid: int, q: int, pattern: str) -> int:
    """Distribution values a block stores per stored cell set (no appends).

    Pull needs the second buffer, doubling the count; the in-place
    pattern stores each value once.
    """
    if pattern not in PATTERNS:
        raise ConfigurationError(f"pattern must be one of {PATTERNS}, got {pattern!r}")
    per_cell = 2 * q if pattern == "pull" else q
    return per_cell * n_fluid

def idx_elements(n_fluid: int, q: int) -> int:
    """Adjacency entries stored: one per non-center direction per cell."""
    return (q - 1) * n_fluid


def memory_total(
    n_cells: int,
    phi: Fraction | float,
    m: TrafficModel,
    n_other_fields: int = N_OTHER_FIELDS,
) -> Fraction:
    """Model footprint in bytes of one block with porosity ``phi``.

    Dense stores every cell regardless of porosity; sparse scales with
    the fluid fraction and adds the adjacency table.  ``n_other_fields``
    covers velocity/density/flag storage at b_pdf granularity.
    """
    phi = Fraction(phi)
    if not 0 <= phi <= 1:
        raise ConfigurationError(f"porosity must lie in [0, 1], got {float(phi)}")
    pdf_term = pdf_elements(1, m.q, m.pattern) * m.b_pdf
    other = n_other_fields * m.b_pdf
    if m.structure == "dense":
        return n_cells * (pdf_term + other)
    idx_term = idx_elements(1, m.q) * m.b_idx
    return n_cells * (pdf_term + idx_term + other) * phi


def aa_memory_saving(q: int, b_pdf: int = B_PDF, b_idx: int = B_IDX) -> Fraction:
    """Sparse footprint saved by dropping the pull pattern's second buffer."""
    pull = memory_total(1, 1, TrafficModel("gpu", "sparse", "pull", q, b_pdf, b_idx))
    aa = memory_total(1, 1, TrafficModel("gpu", "sparse", "aa", q, b_pdf, b_idx))
    return 1 - Fraction(aa, pull)


def memory_breakeven(q: int, b_pdf: int = B_PDF, b_idx: int = B_IDX) -> Fraction:
    """Porosity below which the sparse pull footprint beats dense."""
    dense = memory_total(1, 1, TrafficModel("gpu", "dense", "pull", q, b_pdf, b_idx))
    sparse = memory_total(1, 1, TrafficModel("gpu", "sparse", "pull", q, b_pdf, b_idx))
    return Fraction(dense, sparse)


def roofline(bandwidth: float, m: TrafficModel) -> float:
    """Bandwidth-bound cell updates per second."""
    if bandwidth <= 0:
        raise ConfigurationError(f"bandwidth must be positive, got {bandwidth}")
    return bandwidth / float(bytes_per_cell(m))


def perf_breakeven(m_dense: TrafficModel, m_sparse: TrafficModel) -> Fraction:
    """Porosity at which dense and sparse kernel throughput cross.

    Dense fluid throughput scales linearly with porosity (all cells are
    visited), sparse is porosity-independent, so the crossing sits at
    the ratio of their per-cell traffic.
    """
    if m_dense.structure != "dense" or m_sparse.structure != "sparse":
        raise ConfigurationError("perf_breakeven needs one dense and one sparse model")
    if (m_dense.arch, m_dense.pattern) != (m_sparse.arch, m_sparse.pattern):
        raise ConfigurationError("models must share arch and pattern")
    return Fraction(bytes_per_cell(m_dense), bytes_per_cell(m_sparse))


def workload_sparse(
    n_fluid: int, q: int, b_pdf: int = B_PDF, b_idx: int = B_IDX
) -> int:
    """Balancing weight of a sparse block: traffic bytes per step."""
    return (2 * q * b_pdf + (q - 1) * b_idx) * n_fluid


def workload_dense(n_cells: int, q: int, b_pdf: int = B_PDF) -> int:
    """Balancing weight of a dense block, porosity-independent."""
    return 2 * q * b_pdf * n_cells


def measured_bytes(pdf_accesses: int, idx_reads: int, b_pdf: int = B_PDF,
                   b_idx: int = B_IDX) -> int:
    """Bytes implied by kernel access counters, for model cross-checks."""
    return pdf_accesses * b_pdf + idx_reads * b_idx


def _pct(x: Fraction) -> str:
    return f"{float(x) * 100:.1f}%"


def info_report(
    q: int,
    b_pdf: int = B_PDF,
    b_idx: int = B_IDX,
    bandwidth: float | None = None,
) -> str:
    """Plain-text summary of the traffic/footprint models for one stencil."""
    lines = [f"traffic model: Q={q} b_pdf={b_pdf} b_idx={b_idx}"]
    lines.append(f"{'':14s}{'dense':>10s}{'sparse':>10s}   (bytes per cell)")
    for arch in ARCHS:
        for pattern in PATTERNS:
            row = [
                bytes_per_cell(TrafficModel(arch, s, pattern, q, b_pdf, b_idx))
                for s in STRUCTURES
            ]
            lines.append(
                f"  {arch} {pattern:<4s}  {float(row[0]):>10.1f}{float(row[1]):>10.1f}"
            )
        red = [traffic_reduction(arch, s, q, b_pdf, b_idx) for s in STRUCTURES]
        lines.append(
            f"  {arch} 1-aa/pull{_pct(red[0]):>8s}{_pct(red[1]):>10s}"
        )
    lines.append(f"sparse aa memory saving vs pull: {_pct(aa_memory_saving(q, b_pdf, b_idx))}")
    dense_b = memory_total(1, 1, TrafficModel("gpu", "dense", "pull", q, b_pdf, b_idx))
    sparse_b = memory_total(1, 1, TrafficModel("gpu", "sparse", "pull", q, b_pdf, b_idx))
    be = memory_breakeven(q, b_pdf, b_idx)
    lines.append(
        f"memory break-even porosity: {dense_b}/{sparse_b} = {float(be):.4f}"
    )
    for pattern in PATTERNS:
        pb = perf_breakeven(
            TrafficModel("gpu", "dense", pattern, q, b_pdf, b_idx),
            TrafficModel("gpu", "sparse", pattern, q, b_pdf, b_idx),
        )
        lines.append(f"gpu {pattern} performance break-even porosity: {float(pb):.4f}")
    if bandwidth is not None:
        for arch in ("gpu",):
            for s in STRUCTURES:
                for pattern in PATTERNS:
                    m = TrafficModel(arch, s, pattern, q, b_pdf, b_idx)
                    lines.append(
                        f"roofline {arch} {s} {pattern}: "
                        f"{roofline(bandwidth, m):.3e} updates/s"
                    )
    return "\n".join(lines)
