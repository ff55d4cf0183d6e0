"""Cell tagging and domain face description.

Cells carry a uint8 tag: FLUID cells evolve, NOSLIP and UBB cells are
solid (distributions bounce back, UBB adds a wall-velocity term), and
EXCHANGE marks halo cells owned by a neighboring block.  Fields are
stored C-ordered with axes reversed relative to the public (x, y[, z])
coordinate convention and carry a one-cell ring on every axis, so a
block's boundary treatment is decided entirely from local tags.

The ring of the global field is painted from the face specification:
wall faces get constant NOSLIP or UBB tags, periodic axes get wrapped
images of the opposite side.  Axes are padded in array order (z, then y,
then x), so where two wall faces meet the later-padded axis claims the
corner; a moving lid therefore stops just short of perpendicular side
walls instead of dragging the corner cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError

FLUID = 0
NOSLIP = 1
UBB = 2
EXCHANGE = 3

TAG_NAMES = {FLUID: "fluid", NOSLIP: "noslip", UBB: "ubb", EXCHANGE: "exchange"}


class FaceKind(Enum):
    WALL = "wall"
    PERIODIC = "periodic"
    EXCHANGE = "exchange"


@dataclass(frozen=True)
class FaceSpec:
    """One side of a domain axis: a wall (optionally moving) or periodic."""

    kind: FaceKind
    velocity: tuple[float, ...] | None = None


def rev_shape(dims: tuple[int, ...]) -> tuple[int, ...]:
    """Array shape (z, y, x) for public dims (x, y, z)."""
    return tuple(reversed(dims))


def cell_linear_index(coord: tuple[int, ...], dims: tuple[int, ...]) -> int:
    """C-order scan index of a cell; x varies fastest."""
    lin = 0
    for axis in reversed(range(len(dims))):
        lin = lin * dims[axis] + coord[axis]
    return lin


def cell_coord(lin: int, dims: tuple[int, ...]) -> tuple[int, ...]:
    coord = []
    for axis in range(len(dims)):
        coord.append(lin % dims[axis])
        lin //= dims[axis]
    return tuple(coord)


def ring_offset(pos: tuple[int, ...], dims: tuple[int, ...]) -> tuple[int, ...]:
    """Per-axis -1/0/+1 telling which side of the box a position falls on."""
    out = []
    for axis, p in enumerate(pos):
        if p < 0:
            out.append(-1)
        elif p >= dims[axis]:
            out.append(1)
        else:
            out.append(0)
    return tuple(out)


def frame_mask(dims: tuple[int, ...], width: int | tuple[int, ...]) -> np.ndarray:
    """Boolean array over rev_shape(dims): True for cells within the
    per-axis ``width`` of any box face (widths in public axis order, x
    first; a scalar applies to every axis).  Widths clamp to the box, and
    each must be at least 1 so interior cells never read halo values."""
    if isinstance(width, int):
        widths = (width,) * len(dims)
    else:
        widths = tuple(int(w) for w in width)
    if len(widths) != len(dims):
        raise ConfigurationError(
            f"need one frame width per axis, got {len(widths)} for {len(dims)} axes"
        )
    if any(w < 1 for w in widths):
        raise ConfigurationError(f"frame widths must be >= 1, got {widths}")
    mask = np.zeros(rev_shape(dims), dtype=bool)
    for axis, extent in enumerate(dims):
        w = min(widths[axis], extent)
        arr_axis = len(dims) - 1 - axis
        sel_lo = [slice(None)] * len(dims)
        sel_lo[arr_axis] = slice(0, w)
        mask[tuple(sel_lo)] = True
        sel_hi = [slice(None)] * len(dims)
        sel_hi[arr_axis] = slice(extent - w, extent)
        mask[tuple(sel_hi)] = True
    return mask


@dataclass
class FlagField:
    """Tag field for a box of cells, padded by one ring cell per side.

    ``dims`` is the interior extent in public (x, y[, z]) order.  ``tags``
    has shape rev_shape(dims) + 2 per axis; ``ubb_u`` stores the wall
    velocity per cell with a trailing component axis in (x, y[, z]) order
    and is only meaningful where tags == UBB.  ``periodic`` marks public
    axes handled by in-block index wrapping rather than halo exchange.
    """

    dims: tuple[int, ...]
    tags: np.ndarray
    ubb_u: np.ndarray
    periodic: tuple[bool, ...]

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def core(self) -> tuple[slice, ...]:
        return tuple(slice(1, 1 + n) for n in rev_shape(self.dims))

    @property
    def tags_interior(self) -> np.ndarray:
        return self.tags[self.core]

    def fluid_count(self) -> int:
        return int(np.count_nonzero(self.tags_interior == FLUID))

    def cell_count(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    def porosity(self) -> float:
        return self.fluid_count() / self.cell_count()

    def tag_at(self, coord: tuple[int, ...]) -> int:
        """Tag at a public coordinate; ring positions use offsets -1/L."""
        idx = tuple(coord[self.ndim - 1 - a] + 1 for a in range(self.ndim))
        return int(self.tags[idx])

    def ubb_at(self, coord: tuple[int, ...]) -> np.ndarray:
        idx = tuple(coord[self.ndim - 1 - a] + 1 for a in range(self.ndim))
        return self.ubb_u[idx]


def _normalize_faces(
    dims: tuple[int, ...],
    faces: list[tuple[FaceSpec, FaceSpec]],
) -> list[tuple[FaceSpec, FaceSpec]]:
    ndim = len(dims)
    if len(faces) != ndim:
        raise ConfigurationError(
            f"need one face pair per axis, got {len(faces)} for {ndim} axes"
        )
    out = []
    for axis, (lo, hi) in enumerate(faces):
        for spec in (lo, hi):
            if spec.kind is FaceKind.EXCHANGE:
                raise ConfigurationError("exchange faces only arise from partitioning")
            if spec.velocity is not None:
                if spec.kind is not FaceKind.WALL:
                    raise ConfigurationError("velocity is only valid on wall faces")
                if len(spec.velocity) != ndim:
                    raise ConfigurationError(
                        f"wall velocity needs {ndim} components, got {len(spec.velocity)}"
                    )
        if (lo.kind is FaceKind.PERIODIC) != (hi.kind is FaceKind.PERIODIC):
            raise ConfigurationError(
                f"axis {axis}: periodic must be set on both sides or neither"
            )
        out.append((lo, hi))
    return out


def _wall_tag(spec: FaceSpec) -> int:
    if spec.velocity is not None and any(v != 0.0 for v in spec.velocity):
        return UBB
    return NOSLIP


def make_flags(
    dims: tuple[int, ...],
    faces: list[tuple[FaceSpec, FaceSpec]],
    solid: np.ndarray | None = None,
) -> FlagField:
    """Build the global tag field for a box domain.

    ``faces`` lists (low, high) FaceSpec pairs per public axis (x first).
    ``solid``, if given, is a boolean array over rev_shape(dims) marking
    interior solid cells (tagged NOSLIP).
    """
    dims = tuple(int(d) for d in dims)
    ndim = len(dims)
    if ndim not in (2, 3):
        raise ConfigurationError(f"dims must have 2 or 3 axes, got {ndim}")
    if any(d < 1 for d in dims):
        raise ConfigurationError(f"all extents must be positive, got {dims}")
    faces = _normalize_faces(dims, faces)

    interior = np.zeros(rev_shape(dims), dtype=np.uint8)
    if solid is not None:
        if solid.shape != interior.shape:
            raise ConfigurationError(
                f"solid mask shape {solid.shape} != {interior.shape}"
            )
        interior[solid] = NOSLIP

    ucomp = [np.zeros(rev_shape(dims)) for _ in range(ndim)]

    tags = interior
    for arr_axis in range(ndim):
        axis = ndim - 1 - arr_axis
        lo, hi = faces[axis]
        width = [(1, 1) if a == arr_axis else (0, 0) for a in range(ndim)]
        if lo.kind is FaceKind.PERIODIC:
            tags = np.pad(tags, width, mode="wrap")
            ucomp = [np.pad(u, width, mode="wrap") for u in ucomp]
        else:
            cv = [(0, 0)] * ndim
            cv[arr_axis] = (_wall_tag(lo), _wall_tag(hi))
            tags = np.pad(tags, width, mode="constant", constant_values=cv)
            for comp in range(ndim):
                lo_v = 0.0 if lo.velocity is None else lo.velocity[comp]
                hi_v = 0.0 if hi.velocity is None else hi.velocity[comp]
                uv = [(0.0, 0.0)] * ndim
                uv[arr_axis] = (lo_v, hi_v)
                ucomp[comp] = np.pad(
                    ucomp[comp], width, mode="constant", constant_values=uv
                )

    ubb_u = np.stack(ucomp, axis=-1)
    ubb_u[tags != UBB] = 0.0
    periodic = tuple(faces[a][0].kind is FaceKind.PERIODIC for a in range(ndim))
    return FlagField(dims=dims, tags=tags, ubb_u=ubb_u, periodic=periodic)
