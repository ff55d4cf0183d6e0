"""Geometry builders and voxel-mask I/O.

Particle beds come from uniform rejection sampling of equal hard
spheres: draw a center, keep it if the sphere fits inside the box and
overlaps nothing placed so far.  That process jams near a solid
fraction of 0.38, well short of settled-bed packings (solid ~0.64), so
low porosity targets fail loudly with the achieved value instead of
looping forever.

The mask file format is fixed: magic ``SLBMVOX1``, three little-endian
u32 extents (x, y, z), then the cells x-fastest as an LSB-first bitset
padded to a whole byte, set bits marking solid cells.  2-d masks are
written with z extent 1.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FormatError, UnreachablePorosityError
from .flags import FaceKind, FaceSpec, FlagField, make_flags, rev_shape

MASK_MAGIC = b"SLBMVOX1"
_MASK_HEADER = struct.Struct("<8s3I")

WALL = FaceSpec(FaceKind.WALL)
PERIODIC = FaceSpec(FaceKind.PERIODIC)


@dataclass(frozen=True)
class SpherePack:
    """Equal-diameter hard spheres inside a box, lattice units."""

    extent: tuple[float, ...]
    diameter: float
    centers: np.ndarray  # (n, dim), public axis order
    seed: int

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    def solid_fraction(self) -> float:
        """Analytic solid fraction; exact because spheres never overlap."""
        return self.count * _ball_volume(self.diameter / 2.0, len(self.extent)) / float(
            np.prod(self.extent)
        )


@dataclass
class VoxelMask:
    dims: tuple[int, ...]
    solid: np.ndarray = field(repr=False)  # bool, rev_shape(dims)

    def __post_init__(self) -> None:
        if self.solid.shape != rev_shape(self.dims):
            raise ConfigurationError(
                f"mask shape {self.solid.shape} does not match dims {self.dims}"
            )
        self.solid = self.solid.astype(bool)

    def cell_count(self) -> int:
        return int(np.prod(self.dims))

    def fluid_count(self) -> int:
        return self.cell_count() - int(self.solid.sum())

    def porosity(self) -> float:
        return self.fluid_count() / self.cell_count()


def _ball_volume(radius: float, dim: int) -> float:
    if dim == 2:
        return math.pi * radius**2
    return 4.0 / 3.0 * math.pi * radius**3


def generate_particle_bed(
    extent: tuple[float, ...],
    diameter: float,
    seed: int,
    target_porosity: float | None = None,
    count: int | None = None,
    max_rejections: int = 20000,
) -> SpherePack:
    """Fill a box with non-overlapping equal spheres by rejection
    sampling until either ``count`` spheres are placed or the analytic
    porosity estimate reaches ``target_porosity``.

    Deterministic for a fixed seed.  Raises UnreachablePorosityError
    when ``max_rejections`` draws in a row fail before the stop
    condition is met.
    """
    extent = tuple(float(e) for e in extent)
    if (target_porosity is None) == (count is None):
        raise ConfigurationError("give exactly one of target_porosity or count")
    if diameter <= 0.0 or diameter >= min(extent):
        raise ConfigurationError(
            f"diameter {diameter} must lie in (0, {min(extent)})"
        )
    if target_porosity is not None and not 0.0 <= target_porosity <= 1.0:
        raise ConfigurationError(f"porosity target {target_porosity} outside [0, 1]")

    dim = len(extent)
    radius = diameter / 2.0
    dv = _ball_volume(radius, dim) / float(np.prod(extent))
    rng = np.random.default_rng(seed)
    lo = np.full(dim, radius)
    hi = np.asarray(extent) - radius

    centers: list[np.ndarray] = []
    placed = np.empty((0, dim))
    d2 = diameter * diameter

    def done() -> bool:
        if count is not None:
            return len(centers) >= count
        return 1.0 - len(centers) * dv <= target_porosity

    rejections = 0
    while not done():
        cand = lo + rng.random(dim) * (hi - lo)
        if placed.shape[0]:
            gap = placed - cand
            if (np.einsum("ij,ij->i", gap, gap) < d2).any():
                rejections += 1
                if rejections >= max_rejections:
                    achieved = 1.0 - len(centers) * dv
                    want = (
                        f"porosity {target_porosity}"
                        if count is None
                        else f"{count} spheres"
                    )
                    raise UnreachablePorosityError(
                        f"rejection sampling jammed at porosity {achieved:.4f} "
                        f"({len(centers)} spheres) before reaching {want}"
                    )
                continue
        rejections = 0
        centers.append(cand)
        placed = np.vstack([placed, cand[None]]) if placed.shape[0] else cand[None].copy()

    return SpherePack(extent, diameter, np.asarray(placed), seed)


def voxelize(pack: SpherePack, resolution: float = 1.0) -> VoxelMask:
    """Rasterize a sphere pack: a cell is solid iff its center lies
    strictly inside some sphere."""
    if resolution <= 0.0:
        raise ConfigurationError(f"resolution must be positive, got {resolution}")
    dim = len(pack.extent)
    dims = tuple(max(1, int(round(e * resolution))) for e in pack.extent)
    solid = np.zeros(rev_shape(dims), dtype=bool)
    r = pack.diameter / 2.0
    r2 = r * r
    for center in pack.centers:
        sel = []
        axes = []
        for a in range(dim):
            first = max(0, int(math.floor((center[a] - r) * resolution - 0.5)))
            last = min(dims[a] - 1, int(math.ceil((center[a] + r) * resolution - 0.5)))
            if last < first:
                break
            coords = (np.arange(first, last + 1) + 0.5) / resolution
            sel.append(slice(first, last + 1))
            axes.append(coords - center[a])
        else:
            dist2 = np.zeros(tuple(len(ax) for ax in reversed(axes)))
            for a, ax in enumerate(axes):
                shape = [1] * dim
                shape[dim - 1 - a] = len(ax)
                dist2 = dist2 + (ax * ax).reshape(shape)
            solid[tuple(reversed(sel))] |= dist2 < r2
    return VoxelMask(dims, solid)


def make_riverbed(
    extent: tuple[float, ...],
    bed_fraction: float,
    bed_porosity: float,
    seed: int,
    diameter: float | None = None,
    resolution: float = 1.0,
) -> VoxelMask:
    """Particle bed in the lower part of the box (last axis), free flow
    above.  Overall porosity is roughly
    bed_fraction * bed_porosity + (1 - bed_fraction)."""
    if not 0.0 <= bed_fraction <= 1.0:
        raise ConfigurationError(f"bed fraction {bed_fraction} outside [0, 1]")
    dims = tuple(max(1, int(round(e * resolution))) for e in extent)
    if bed_fraction == 0.0:
        return VoxelMask(dims, np.zeros(rev_shape(dims), dtype=bool))
    bed_extent = extent[:-1] + (extent[-1] * bed_fraction,)
    if diameter is None:
        diameter = min(bed_extent) / 8.0
    pack = generate_particle_bed(
        bed_extent, diameter, seed, target_porosity=bed_porosity
    )
    bed = voxelize(pack, resolution)
    solid = np.zeros(rev_shape(dims), dtype=bool)
    solid[: bed.solid.shape[0]] = bed.solid
    return VoxelMask(dims, solid)


# -- mask file format ------------------------------------------------------------


def write_voxel_mask(path, mask: VoxelMask) -> None:
    dims3 = tuple(mask.dims) + (1,) * (3 - len(mask.dims))
    bits = mask.solid.reshape(-1).astype(np.uint8)
    payload = np.packbits(bits, bitorder="little").tobytes()
    with open(path, "wb") as fh:
        fh.write(_MASK_HEADER.pack(MASK_MAGIC, *dims3))
        fh.write(payload)


def read_voxel_mask(path) -> VoxelMask:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _MASK_HEADER.size:
        raise FormatError(
            f"voxel mask truncated at offset {len(data)}: header needs "
            f"{_MASK_HEADER.size} bytes"
        )
    magic, nx, ny, nz = _MASK_HEADER.unpack_from(data, 0)
    if magic != MASK_MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0, want {MASK_MAGIC!r}")
    if min(nx, ny, nz) < 1:
        raise FormatError(f"non-positive extent {(nx, ny, nz)} at offset 8")
    ncells = nx * ny * nz
    nbytes = (ncells + 7) // 8
    if len(data) < _MASK_HEADER.size + nbytes:
        raise FormatError(
            f"voxel mask truncated at offset {len(data)}: payload needs "
            f"{nbytes} bytes for {ncells} cells"
        )
    raw = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=_MASK_HEADER.size)
    bits = np.unpackbits(raw, bitorder="little")[:ncells].astype(bool)
    dims = (nx, ny, nz) if nz > 1 else (nx, ny)
    return VoxelMask(dims, bits.reshape(rev_shape(dims)))


# -- synthetic obstacle fields ------------------------------------------------------


def random_obstacles(dims: tuple[int, ...], porosity: float, seed) -> np.ndarray:
    """Cell-wise random solid placement hitting the porosity exactly:
    round((1 - porosity) * N) solid cells at seeded uniform positions."""
    if not 0.0 <= porosity <= 1.0:
        raise ConfigurationError(f"porosity {porosity} outside [0, 1]")
    n = int(np.prod(dims))
    n_solid = int(round((1.0 - porosity) * n))
    rng = np.random.default_rng(seed)
    solid = np.zeros(n, dtype=bool)
    solid[rng.permutation(n)[:n_solid]] = True
    return solid.reshape(rev_shape(dims))


def riverbed_solids(
    dims: tuple[int, ...],
    block_size: tuple[int, ...],
    bed_porosity: float = 0.35,
    seed: int = 0,
    bed_fraction: float = 0.5,
) -> np.ndarray:
    """Block-synthetic river bed: blocks in the lower part of the last
    axis get cell-random solids at the bed porosity (exact count per
    block), the rest stay pure fluid."""
    dim = len(dims)
    if any(dims[a] % block_size[a] for a in range(dim)):
        raise ConfigurationError(
            f"dims {dims} not divisible by block size {block_size}"
        )
    solid = np.zeros(rev_shape(dims), dtype=bool)
    bed_top = bed_fraction * dims[-1]
    grid = tuple(dims[a] // block_size[a] for a in range(dim))
    for flat in range(int(np.prod(grid))):
        pos = []
        rem = flat
        for a in range(dim):
            pos.append(rem % grid[a])
            rem //= grid[a]
        if (pos[-1] + 1) * block_size[-1] > bed_top:
            continue
        block = random_obstacles(block_size, bed_porosity, [seed, flat])
        sel = tuple(
            slice(pos[a] * block_size[a], (pos[a] + 1) * block_size[a])
            for a in reversed(range(dim))
        )
        solid[sel] = block
    return solid


# -- ready-made flag fields ---------------------------------------------------------


def couette_flags(dims: tuple[int, ...], u_wall: float) -> FlagField:
    """Periodic along x, resting wall at the bottom of the last axis,
    wall moving with +x speed ``u_wall`` at the top."""
    lid = FaceSpec(FaceKind.WALL, velocity=(u_wall,) + (0.0,) * (len(dims) - 1))
    faces = [(PERIODIC, PERIODIC)] * (len(dims) - 1) + [(WALL, lid)]
    return make_flags(dims, faces)


def channel_flags(dims: tuple[int, ...], solid: np.ndarray | None = None) -> FlagField:
    """Periodic along x, resting walls on every other axis."""
    faces = [(PERIODIC, PERIODIC)] + [(WALL, WALL)] * (len(dims) - 1)
    return make_flags(dims, faces, solid=solid)


def obstacle_flags(
    dims: tuple[int, ...], porosity: float, seed, periodic: bool = True
) -> FlagField:
    """Fully periodic (or fully walled) box with random obstacles."""
    f = PERIODIC if periodic else WALL
    return make_flags(dims, [(f, f)] * len(dims), solid=random_obstacles(dims, porosity, seed))


def riverbed_flags(
    dims: tuple[int, ...],
    block_size: tuple[int, ...],
    bed_porosity: float = 0.35,
    seed: int = 0,
    lid_speed: float = 0.02,
) -> FlagField:
    """Synthetic river-bed channel: porous lower blocks, free upper
    blocks, periodic along x, wall below, moving lid above driving the
    free-flow region."""
    lid = FaceSpec(FaceKind.WALL, velocity=(lid_speed,) + (0.0,) * (len(dims) - 1))
    faces = [(PERIODIC, PERIODIC)] * (len(dims) - 1) + [(WALL, lid)]
    solid = riverbed_solids(dims, block_size, bed_porosity, seed)
    return make_flags(dims, faces, solid=solid)


def mask_flags(mask: VoxelMask, periodic_x: bool = True) -> FlagField:
    """Flag field for a voxel mask: periodic along x by default, walls
    on the remaining axes."""
    first = PERIODIC if periodic_x else WALL
    faces = [(first, first)] + [(WALL, WALL)] * (len(mask.dims) - 1)
    return make_flags(mask.dims, faces, solid=mask.solid)
