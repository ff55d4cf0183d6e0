"""Block decomposition of a global geometry and everything per-run that
hangs off it: layout classification, engine construction, halo edge
plans, load balancing, and the step loop.

Blocks are uniform boxes cut from one tensor grid.  All-solid blocks
are discarded up front; the remaining blocks get their halo ring
straight from the global padded field, with remote fluid retagged as
exchange cells.  Block ids are grid-linear (z-major) and stable whether
or not neighbors were discarded.

Balancing orders retained blocks along a space-filling curve over grid
coordinates (a Hilbert curve when the non-trivial grid axes form an
equal power-of-two box, otherwise Morton order, documented fallback)
and cuts contiguous segments greedily against the running average
remaining load per worker.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import exchange, model
from .core import CollisionParams, Parity
from .counters import Counters
from .dense import DenseEngine
from .errors import ConfigurationError, NumericalInstabilityError
from .exchange import EdgePlan
from .flags import EXCHANGE, FLUID, NOSLIP, FlagField, rev_shape
from .sparse import SparseEngine
from .stencil import Stencil

log = logging.getLogger(__name__)

POLICIES = ("sparse", "dense", "hybrid")
DEFAULT_PHI_S = 0.8


@dataclass
class Block:
    bid: int
    grid_pos: tuple[int, ...]
    origin: tuple[int, ...]
    flags: FlagField
    n_fluid: int
    kind: str = ""
    engine: object = None
    neighbors: dict = field(default_factory=dict)

    @property
    def porosity(self) -> float:
        return self.n_fluid / self.flags.cell_count()


def classify_kind(porosity: float, policy: str, phi_s: float = DEFAULT_PHI_S) -> str:
    """Storage kind for one block: hybrid picks dense at or above the
    threshold (ties go dense), dedicated policies ignore porosity."""
    if policy == "hybrid":
        return "dense" if porosity >= phi_s else "sparse"
    if policy in ("sparse", "dense"):
        return policy
    raise ConfigurationError(f"unknown layout policy {policy!r}")


class Domain:
    def __init__(
        self,
        global_flags: FlagField,
        block_size: int | tuple[int, ...],
        stencil: Stencil,
        params: CollisionParams,
        pattern: str = "pull",
        policy: str = "sparse",
        phi_s: float = DEFAULT_PHI_S,
        frame_width: int | tuple[int, ...] | None = None,
    ):
        if policy not in POLICIES:
            raise ConfigurationError(f"unknown layout policy {policy!r}")
        self.stencil = stencil
        self.params = params
        self.pattern = pattern
        self.policy = policy
        self.phi_s = phi_s
        self.frame_width = frame_width

        dim = stencil.dim
        if isinstance(block_size, int):
            block_size = (block_size,) * dim
        if len(block_size) != dim or any(s < 1 for s in block_size):
            raise ConfigurationError(f"bad block size {block_size}")
        self.block_size = tuple(int(s) for s in block_size)

        global_flags = _pad_to_multiple(global_flags, self.block_size)
        self.global_flags = global_flags
        self.global_dims = global_flags.dims
        self.periodic = global_flags.periodic
        self.grid = tuple(
            self.global_dims[a] // self.block_size[a] for a in range(dim)
        )

        self.blocks: dict[int, Block] = {}
        self._partition()
        if not self.blocks:
            raise ConfigurationError("geometry has no fluid cells")

        for block in self.blocks.values():
            block.kind = classify_kind(block.porosity, policy, phi_s)
            eng_cls = DenseEngine if block.kind == "dense" else SparseEngine
            block.engine = eng_cls(
                block.flags, stencil, params, pattern=pattern, frame_width=frame_width
            )

        self._build_adjacency()
        self.edge_plans: list[EdgePlan] = [
            EdgePlan(a, b, sigma, stencil, self.blocks[a].engine, self.blocks[b].engine)
            for (a, b, sigma) in self._edges
        ]
        self.assignment: dict[int, int] = {bid: 0 for bid in self.blocks}
        self.overlap_samples: list[tuple[float, float]] = []
        self.steps_done = 0

    # -- construction --------------------------------------------------------

    def _partition(self) -> None:
        dim = self.stencil.dim
        gf = self.global_flags
        block_periodic = tuple(
            gf.periodic[a] and self.grid[a] == 1 for a in range(dim)
        )
        self._block_periodic = block_periodic

        for pos in _grid_positions(self.grid):
            bid = _grid_linear(pos, self.grid)
            origin = tuple(pos[a] * self.block_size[a] for a in range(dim))
            tags = _slice_padded(gf.tags, origin, self.block_size, dim)
            ubb = _slice_padded(gf.ubb_u, origin, self.block_size, dim)
            _retag_exchange(tags, block_periodic)
            flags = FlagField(
                dims=self.block_size,
                tags=tags,
                ubb_u=ubb,
                periodic=block_periodic,
            )
            n_fluid = flags.fluid_count()
            if n_fluid == 0:
                continue
            self.blocks[bid] = Block(bid, pos, origin, flags, n_fluid)

    def _build_adjacency(self) -> None:
        dim = self.stencil.dim
        offsets = sorted(
            {
                tuple(
                    0 if self._block_periodic[a] else int(self.stencil.c[qi][a])
                    for a in range(dim)
                )
                for qi in range(1, self.stencil.q)
            }
            - {(0,) * dim}
        )
        self._edges: list[tuple[int, int, tuple[int, ...]]] = []
        for bid, block in sorted(self.blocks.items()):
            for sigma in offsets:
                npos = []
                ok = True
                for a in range(dim):
                    p = block.grid_pos[a] + sigma[a]
                    if self.periodic[a]:
                        p %= self.grid[a]
                    elif not 0 <= p < self.grid[a]:
                        ok = False
                        break
                    npos.append(p)
                if not ok:
                    continue
                nbid = _grid_linear(tuple(npos), self.grid)
                if nbid not in self.blocks:
                    continue
                block.neighbors[sigma] = nbid
                self._edges.append((bid, nbid, sigma))

    # -- state init ------------------------------------------------------------

    def init_equilibrium(self, rho: float = 1.0, u=None) -> None:
        for block in self.blocks.values():
            block.engine.init_equilibrium(rho, u)

    def init_random(self, seed: int, amplitude: float = 0.005) -> None:
        """Seeded random near-equilibrium state drawn over the global
        grid, so results are invariant under decomposition and layout."""
        rng = np.random.default_rng(seed)
        shape = rev_shape(self.global_dims)
        rho_g = 1.0 + amplitude * rng.standard_normal(shape)
        u_g = amplitude * rng.standard_normal((self.stencil.dim,) + shape)
        for block in self.blocks.values():
            eng = block.engine
            coords = eng.fluid_coords + np.asarray(block.origin, dtype=np.int64)
            flat = np.ravel_multi_index(coords[:, ::-1].T, shape)
            rho_b = rho_g.reshape(-1)[flat]
            u_b = u_g.reshape(self.stencil.dim, -1)[:, flat]
            eng.init_canonical(
                _equilibrium(rho_b, u_b, self.stencil)
            )

    # -- stepping --------------------------------------------------------------

    @property
    def parity(self) -> Parity:
        return next(iter(self.blocks.values())).engine.parity

    def run(self, steps: int, driver: str = "sequential") -> None:
        step_fn = self._driver(driver)
        for _ in range(steps):
            try:
                step_fn(self)
            except NumericalInstabilityError as e:
                raise NumericalInstabilityError(
                    f"unstable at step {self.steps_done}: {e}"
                ) from e
            self.steps_done += 1

    def _driver(self, name: str) -> Callable:
        if name == "sequential":
            return exchange.timestep_sequential
        if name == "overlapped":
            if self.frame_width is None:
                raise ConfigurationError(
                    "overlapped driver needs frame_width at construction"
                )
            return exchange.timestep_overlapped
        raise ConfigurationError(f"unknown driver {name!r}")

    def overlap_ratio(self) -> float:
        num = sum(s[0] for s in self.overlap_samples)
        den = sum(s[1] for s in self.overlap_samples)
        return num / den if den > 0 else 0.0

    # -- observation -------------------------------------------------------------

    def fluid_mask(self) -> np.ndarray:
        return self.global_flags.tags_interior == FLUID

    def gather_macroscopics(self) -> tuple[np.ndarray, np.ndarray]:
        shape = rev_shape(self.global_dims)
        rho = np.zeros(shape)
        u = np.zeros(shape + (self.stencil.dim,))
        for block in self.blocks.values():
            r, v = block.engine.macroscopic_fields()
            sel = _interior_slices(block.origin, self.block_size, self.stencil.dim)
            rho[sel] = r
            u[sel] = v
        return rho, u

    def gather_canonical(self) -> np.ndarray:
        """(q,) + global grid array of per-direction values, zeros at
        non-fluid cells; the cross-run comparison surface."""
        shape = rev_shape(self.global_dims)
        out = np.zeros((self.stencil.q,) + shape)
        out2d = out.reshape(self.stencil.q, -1)
        for block in self.blocks.values():
            eng = block.engine
            coords = eng.fluid_coords + np.asarray(block.origin, dtype=np.int64)
            flat = np.ravel_multi_index(coords[:, ::-1].T, shape)
            out2d[:, flat] = eng.canonical_state()
        return out

    def counters(self) -> Counters:
        total = Counters()
        for block in self.blocks.values():
            total.add(block.engine.counters)
        return total

    def total_fluid(self) -> int:
        return sum(b.n_fluid for b in self.blocks.values())

    # -- balancing ---------------------------------------------------------------

    def workload(self, bid: int) -> int:
        block = self.blocks[bid]
        if block.kind == "sparse":
            return model.workload_sparse(block.n_fluid, self.stencil.q)
        return model.workload_dense(block.flags.cell_count(), self.stencil.q)

    def total_workload(self) -> int:
        return sum(self.workload(bid) for bid in self.blocks)

    def model_bytes_per_update(self, arch: str = "cpu") -> float:
        """Predicted kernel traffic per fluid-cell update, aggregated
        over blocks: dense blocks pay for every cell, sparse only for
        fluid, so the mix depends on each block's kind and porosity."""
        total = 0.0
        for block in self.blocks.values():
            m = model.TrafficModel(arch, block.kind, self.pattern, self.stencil.q)
            per_cell = float(model.bytes_per_cell(m))
            cells = block.flags.cell_count() if block.kind == "dense" else block.n_fluid
            total += per_cell * cells
        return total / self.total_fluid()

    def curve_order(self) -> list[int]:
        return sorted(
            self.blocks, key=lambda bid: (curve_key(self.blocks[bid].grid_pos, self.grid), bid)
        )

    def naive_assignment(self, n_workers: int) -> dict[int, int]:
        """Contiguous equal-count split in block-id order."""
        bids = sorted(self.blocks)
        return _split_even(bids, n_workers)

    def balance(self, n_workers: int) -> dict[int, int]:
        if n_workers < 1:
            raise ConfigurationError("need at least one worker")
        order = self.curve_order()
        if n_workers > len(order):
            log.warning(
                "more workers (%d) than blocks (%d); some stay empty",
                n_workers,
                len(order),
            )
        loads = [self.workload(bid) for bid in order]
        seats = _greedy_segments(loads, n_workers)
        self.assignment = {bid: int(w) for bid, w in zip(order, seats)}
        return self.assignment

    def worker_loads(self, assignment: dict[int, int], n_workers: int) -> np.ndarray:
        loads = np.zeros(n_workers)
        for bid, w in assignment.items():
            loads[w] += self.workload(bid)
        return loads

    def inter_worker_face_area(self, assignment: dict[int, int]) -> int:
        """Sum of face areas between blocks owned by different workers
        (each touching pair counted once)."""
        total = 0
        for bid, block in self.blocks.items():
            for sigma, nbid in block.neighbors.items():
                if sum(abs(t) for t in sigma) != 1 or bid > nbid:
                    continue
                if assignment[bid] != assignment[nbid]:
                    area = 1
                    for a, t in enumerate(sigma):
                        if t == 0:
                            area *= self.block_size[a]
                    total += area
        return total


# -- helpers -------------------------------------------------------------------


def _equilibrium(rho, u, stencil):
    from .core import equilibrium_fields

    return equilibrium_fields(rho, u, stencil)


def _grid_positions(grid: tuple[int, ...]):
    rev = grid[::-1]
    for flat in range(int(np.prod(rev))):
        pos = []
        rem = flat
        for extent in rev[::-1]:
            pos.append(rem % extent)
            rem //= extent
        yield tuple(pos)


def _grid_linear(pos: tuple[int, ...], grid: tuple[int, ...]) -> int:
    out = 0
    for a in reversed(range(len(grid))):
        out = out * grid[a] + pos[a]
    return out


def _interior_slices(origin, size, dim):
    return tuple(
        slice(origin[a], origin[a] + size[a]) for a in reversed(range(dim))
    )


def _slice_padded(arr: np.ndarray, origin, size, dim) -> np.ndarray:
    sel = tuple(
        slice(origin[a], origin[a] + size[a] + 2) for a in reversed(range(dim))
    )
    return arr[sel].copy()


def _retag_exchange(tags: np.ndarray, block_periodic: tuple[bool, ...]) -> None:
    """Halo fluid becomes exchange wherever the halo offset leaves the
    block on a non-wrapping axis."""
    dim = len(block_periodic)
    ring = np.zeros(tags.shape[:dim], dtype=bool)
    for arr_axis in range(dim):
        axis = dim - 1 - arr_axis
        if block_periodic[axis]:
            continue
        sel = [slice(None)] * dim
        sel[arr_axis] = 0
        ring[tuple(sel)] = True
        sel[arr_axis] = tags.shape[arr_axis] - 1
        ring[tuple(sel)] = True
    tags[ring & (tags == FLUID)] = EXCHANGE


def _pad_to_multiple(gf: FlagField, block_size: tuple[int, ...]) -> FlagField:
    """Grow walled axes to the next block multiple with solid filler;
    refuse on periodic axes, where filler would change the topology."""
    dim = len(gf.dims)
    pads = []
    for a in range(dim):
        rem = gf.dims[a] % block_size[a]
        pad = 0 if rem == 0 else block_size[a] - rem
        if pad and gf.periodic[a]:
            raise ConfigurationError(
                f"axis {a} extent {gf.dims[a]} not divisible by block size "
                f"{block_size[a]} and periodic; padding would break the wrap"
            )
        pads.append(pad)
    if not any(pads):
        return gf
    new_dims = tuple(gf.dims[a] + pads[a] for a in range(dim))
    tags = np.full(tuple(n + 2 for n in rev_shape(new_dims)), NOSLIP, dtype=gf.tags.dtype)
    ubb = np.zeros(tags.shape + (dim,))
    old = tuple(slice(0, s) for s in gf.tags.shape)
    tags[old] = gf.tags
    ubb[old] = gf.ubb_u
    return FlagField(dims=new_dims, tags=tags, ubb_u=ubb, periodic=gf.periodic)


def _split_even(items: list[int], n_workers: int) -> dict[int, int]:
    counts = [
        len(items) // n_workers + (1 if i < len(items) % n_workers else 0)
        for i in range(n_workers)
    ]
    out = {}
    i = 0
    for w, c in enumerate(counts):
        for _ in range(c):
            out[items[i]] = w
            i += 1
    return out


def _greedy_segments(loads: list[int], n_workers: int) -> list[int]:
    """Contiguous cuts: close a worker's segment when taking the next
    block would overshoot the running per-worker target by more than
    half that block."""
    seats = []
    remaining = float(sum(loads))
    workers_left = n_workers
    target = remaining / workers_left
    w = 0
    acc = 0.0
    for load in loads:
        if w < n_workers - 1 and acc > 0 and acc + load / 2.0 > target:
            w += 1
            workers_left -= 1
            target = remaining / workers_left if workers_left else 0.0
            acc = 0.0
        seats.append(w)
        acc += load
        remaining -= load
    return seats


# -- space-filling curves --------------------------------------------------------


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def hilbert_key(coords: tuple[int, ...], bits: int) -> int:
    """Index along the Hilbert curve of a 2**bits-sized box (Skilling's
    transpose form)."""
    n = len(coords)
    x = list(coords)
    m = 1 << (bits - 1)
    q = m
    while q > 1:
        p = q - 1
        for i in range(n):
            if x[i] & q:
                x[0] ^= p
            else:
                t = (x[0] ^ x[i]) & p
                x[0] ^= t
                x[i] ^= t
        q >>= 1
    for i in range(1, n):
        x[i] ^= x[i - 1]
    t = 0
    q = m
    while q > 1:
        if x[n - 1] & q:
            t ^= q - 1
        q >>= 1
    for i in range(n):
        x[i] ^= t
    h = 0
    for bit in range(bits - 1, -1, -1):
        for i in range(n):
            h = (h << 1) | ((x[i] >> bit) & 1)
    return h


def morton_key(coords: tuple[int, ...], bits: int) -> int:
    h = 0
    for bit in range(bits - 1, -1, -1):
        for c in coords:
            h = (h << 1) | ((c >> bit) & 1)
    return h


def curve_key(pos: tuple[int, ...], grid: tuple[int, ...]) -> int:
    """Balancing-curve position: Hilbert over the non-trivial grid axes
    when they form an equal power-of-two box, Morton otherwise."""
    active = [a for a in range(len(grid)) if grid[a] > 1]
    if not active:
        return 0
    coords = tuple(pos[a] for a in active)
    extents = [grid[a] for a in active]
    if len(coords) == 1:
        return coords[0]
    if len(set(extents)) == 1 and _is_pow2(extents[0]):
        return hilbert_key(coords, extents[0].bit_length() - 1)
    bits = max(e - 1 for e in extents).bit_length()
    return morton_key(coords, max(bits, 1))
