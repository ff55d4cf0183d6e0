"""Direct-addressing block engine.

Stores one structure-of-arrays plane per direction over the padded block
box (one halo cell per side) and sweeps the full box every step: there
is no cell list to skip solids with, so solid cells are carried as inert
self-gathering columns that collide back to their own resting values (to
within roundoff; the weights do not sum to exactly 1 in floats).  Fluid
results stay bitwise independent of that padding since every batch
column is computed separately and never reads a solid slot, and the same
collision routine runs on the same per-cell values as in the indirect
engine, which is what makes cross-layout comparisons exact to the bit.

Boundary handling is resolved once at build time.  For every
(direction, cell) pair the read location is either the neighbor slot it
streams from (periodic axes wrap in-block when the block spans the
axis), or the cell's own opposite slot when the neighbor is a wall;
moving walls contribute an additive momentum term on top of the folded
read.  The combined pull-collide-push step writes each result back to
exactly the location it was read from, so a single buffer suffices and
the vectorized in-place scatter is race-free: every location is touched
by exactly one pair (asserted at build).  The two-buffer pull pattern
reuses the same read plan and writes straight slots instead.
"""

from __future__ import annotations

import numpy as np

from . import core
from .core import CollisionParams, Parity
from .counters import Counters
from .errors import ConfigurationError, EmptyBlockError
from .flags import EXCHANGE, FLUID, UBB, FlagField, frame_mask, rev_shape
from .stencil import Stencil

PATTERNS = ("pull", "aa")


class _Phase:
    """Precomputed plan for one cell subset (all / interior / frame)."""

    __slots__ = ("name", "cols", "x_flat", "gather", "corr", "box_cells")

    def __init__(self, name, cols, x_flat, gather, corr, box_cells):
        self.name = name
        self.cols = cols
        self.x_flat = x_flat
        self.gather = gather
        self.corr = corr
        self.box_cells = box_cells


class DenseEngine:
    layout = "dense"

    def __init__(
        self,
        flags: FlagField,
        stencil: Stencil,
        params: CollisionParams,
        pattern: str = "pull",
        frame_width: int | tuple[int, ...] | None = None,
    ):
        if pattern not in PATTERNS:
            raise ConfigurationError(f"unknown streaming pattern {pattern!r}")
        if len(flags.dims) != stencil.dim:
            raise ConfigurationError(
                f"{stencil.name} needs {stencil.dim}-d dims, got {flags.dims}"
            )
        self.flags = flags
        self.stencil = stencil
        self.params = params
        self.pattern = pattern
        self.dims = flags.dims

        self._padded_shape = tuple(n + 2 for n in rev_shape(self.dims))
        self._npad = int(np.prod(self._padded_shape))

        tags_int = flags.tags_interior
        pos = np.argwhere(np.ones(rev_shape(self.dims), dtype=bool))
        self._fluid_rows = tags_int.reshape(-1) == FLUID
        self.n_fluid = int(self._fluid_rows.sum())
        if self.n_fluid == 0:
            raise EmptyBlockError(f"block {self.dims} has no fluid cells")
        # public-order (x, y[, z]) coordinates, row i = fluid cell i
        self.fluid_coords = np.ascontiguousarray(pos[self._fluid_rows, ::-1])
        self._x_flat = np.ravel_multi_index((pos + 1).T, self._padded_shape)
        self._x_flat_fluid = self._x_flat[self._fluid_rows]

        gather, corr = self._build_gather(pos)
        flat_all = gather.ravel()
        assert np.unique(flat_all).size == flat_all.size, (
            "each storage location must belong to exactly one (direction, cell) pair"
        )
        self._gather = gather
        self._corr = corr

        all_cols = np.arange(pos.shape[0])
        self._phases = {"all": self._make_phase("all", all_cols)}
        self.frame_width = frame_width
        if frame_width is not None:
            in_frame = frame_mask(self.dims, frame_width).reshape(-1)
            self._phases["frame"] = self._make_phase("frame", all_cols[in_frame])
            self._phases["interior"] = self._make_phase(
                "interior", all_cols[~in_frame]
            )

        q = stencil.q
        self._f = np.full((q,) + self._padded_shape, np.nan)
        self._tmp = np.full((q,) + self._padded_shape, np.nan) if pattern == "pull" else None
        self.parity = Parity.EVEN
        self.counters = Counters()

    # -- build ---------------------------------------------------------------

    def _build_gather(self, pos):
        """Per (direction, box cell): absolute read location plus the
        moving-wall additive terms, resolved from the halo tags.  Solid
        cells read their own slots straight."""
        st = self.stencil
        npad = self._npad
        tags_flat = self.flags.tags.reshape(-1)
        ubb_flat = self.flags.ubb_u.reshape(-1, st.dim)
        fluid = self._fluid_rows
        c_arr = st.c[:, ::-1]  # velocity components in array-axis order

        gather = np.empty((st.q, pos.shape[0]), dtype=np.int64)
        gather[0] = self._x_flat
        corr = [(np.empty(0, dtype=np.int64), np.empty(0))]
        for qi in range(1, st.q):
            src = pos - c_arr[qi]
            for axis, per in enumerate(self.flags.periodic):
                if per:
                    arr_axis = st.dim - 1 - axis
                    src[:, arr_axis] %= self.dims[axis]
            src_flat = np.ravel_multi_index((src + 1).T, self._padded_shape)
            tag = tags_flat[src_flat]
            streamed = fluid & ((tag == FLUID) | (tag == EXCHANGE))
            folded = fluid & ~streamed
            gather[qi] = qi * npad + np.where(fluid, src_flat, self._x_flat)
            gather[qi, folded] = st.inv[qi] * npad + self._x_flat[folded]
            at_ubb = np.nonzero(fluid & (tag == UBB))[0]
            vals = core.ubb_correction(st, qi, ubb_flat[src_flat[at_ubb]])
            corr.append((at_ubb, vals))
        return gather, corr

    def _make_phase(self, name, cols):
        sub_corr = []
        for at, vals in self._corr:
            if at.size == 0 or cols.size == 0:
                sub_corr.append((np.empty(0, dtype=np.int64), np.empty(0)))
                continue
            k = np.minimum(np.searchsorted(cols, at), cols.size - 1)
            keep = cols[k] == at
            sub_corr.append((k[keep], vals[keep]))
        return _Phase(
            name,
            cols,
            self._x_flat[cols],
            np.ascontiguousarray(self._gather[:, cols]),
            sub_corr,
            int(cols.size),
        )

    # -- state init ----------------------------------------------------------

    def init_canonical(self, values: np.ndarray) -> None:
        """Load per-direction values for the fluid cells.  Solid cells
        get their resting weights (a collision fixed point up to
        roundoff), halo slots are poisoned so an unplanned read is
        loud."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.stencil.q, self.n_fluid):
            raise ConfigurationError(
                f"expected state shape {(self.stencil.q, self.n_fluid)}, got {values.shape}"
            )
        self._f.fill(np.nan)
        if self._tmp is not None:
            self._tmp.fill(np.nan)
        f2d = self._f.reshape(self.stencil.q, -1)
        w = np.asarray(self.stencil.w, dtype=np.float64)
        f2d[:, self._x_flat] = w[:, None]
        f2d[:, self._x_flat_fluid] = values
        self.parity = Parity.EVEN

    def init_equilibrium(self, rho=1.0, u=None) -> None:
        rho_arr = np.broadcast_to(np.asarray(rho, dtype=np.float64), (self.n_fluid,))
        if u is None:
            u_arr = np.zeros((self.stencil.dim, self.n_fluid))
        else:
            u = np.asarray(u, dtype=np.float64)
            if u.ndim == 1:
                u_arr = np.broadcast_to(u[:, None], (self.stencil.dim, self.n_fluid))
            else:
                u_arr = u
        self.init_canonical(core.equilibrium_fields(rho_arr, u_arr, self.stencil))

    # -- stepping ------------------------------------------------------------

    def step(self, phase: str = "all") -> None:
        if phase not in self._phases:
            raise ConfigurationError(
                f"{phase!r} sweep needs split lists; build with frame_width"
            )
        ph = self._phases[phase]
        if self.pattern == "pull":
            self._step_pull(ph)
        elif self.parity is Parity.EVEN:
            self._step_combined(ph)
        else:
            self._step_reversed(ph)
        self._count(ph)

    def finish_step(self) -> None:
        """Commit the step once every subset has run."""
        if self.pattern == "pull":
            self._f, self._tmp = self._tmp, self._f
        else:
            self.parity = self.parity.flipped()
        self.counters.steps += 1

    def _gather_state(self, ph: _Phase) -> np.ndarray:
        t = self._f.reshape(-1)[ph.gather]
        for qi, (at, vals) in enumerate(ph.corr):
            if at.size:
                t[qi, at] += vals
        return t

    def _step_pull(self, ph: _Phase) -> None:
        if ph.cols.size == 0:
            return
        out = core.collide(self._gather_state(ph), self.params, self.stencil)
        self._tmp.reshape(self.stencil.q, -1)[:, ph.x_flat] = out

    def _step_combined(self, ph: _Phase) -> None:
        # pull-collide-push: write each result to its own read location,
        # reversing direction slots; moving-wall terms for the following
        # reversed step are added at the folded writes they land on.
        if ph.cols.size == 0:
            return
        out = core.collide(self._gather_state(ph), self.params, self.stencil)
        flat = self._f.reshape(-1)
        for qi in range(self.stencil.q):
            vals = out[self.stencil.inv[qi]]
            at, corr = ph.corr[qi]
            if at.size:
                vals = vals.copy()
                vals[at] += corr
            flat[ph.gather[qi]] = vals

    def _step_reversed(self, ph: _Phase) -> None:
        # cell-local: read every direction from its opposite slot, write
        # straight, restoring canonical storage
        if ph.cols.size == 0:
            return
        f2d = self._f.reshape(self.stencil.q, -1)
        t = f2d[:, ph.x_flat][self.stencil.inv]
        out = core.collide(t, self.params, self.stencil)
        f2d[:, ph.x_flat] = out

    def _count(self, ph: _Phase) -> None:
        c = self.counters
        c.cells_visited += ph.box_cells
        if ph.name == "interior":
            c.cells_visited_interior += ph.box_cells
        elif ph.name == "frame":
            c.cells_visited_frame += ph.box_cells
        c.pdf_accesses += 2 * self.stencil.q * ph.box_cells

    def refresh_boundary(self, parity: Parity) -> None:
        """Wall terms live in the gather/scatter plans; nothing to do."""

    # -- inspection ----------------------------------------------------------

    def canonical_state(self) -> np.ndarray:
        """(q, n_fluid) array of direction-q values per fluid cell.

        At even parity this is the post-collision state of the last
        completed step.  At odd parity (mid-pair for the in-place
        pattern) it is the streamed input the upcoming reversed step
        will consume: one streaming ahead of the last collision, with
        the correct macroscopic moments for the upcoming step since
        collisions conserve them.  Mid-pair values next to another
        block's halo are only current once that exchange phase ran."""
        sub = self._f.reshape(self.stencil.q, -1)[:, self._x_flat_fluid]
        if self.parity is Parity.ODD:
            sub = sub[self.stencil.inv]
        return sub

    def macroscopic_fields(self) -> tuple[np.ndarray, np.ndarray]:
        """Density and velocity over the block box (zeros at solids)."""
        rho, u = core.moments(self.canonical_state(), self.stencil)
        shape = rev_shape(self.dims)
        int_flat = np.ravel_multi_index(
            (self.fluid_coords[:, ::-1]).T, shape
        )
        rho_field = np.zeros(shape)
        rho_field.reshape(-1)[int_flat] = rho
        u_field = np.zeros(shape + (self.stencil.dim,))
        u_field.reshape(-1, self.stencil.dim)[int_flat] = u.T
        return rho_field, u_field

    # -- exchange access -----------------------------------------------------

    def slot_index(self, coords: np.ndarray, qs: np.ndarray) -> np.ndarray:
        """Absolute storage locations for direction rows ``qs`` at public
        coordinates ``coords`` (halo cells addressed as -1 / extent)."""
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.stencil.dim)
        arr = coords[:, ::-1] + 1
        flat = np.ravel_multi_index(arr.T, self._padded_shape)
        return np.asarray(qs, dtype=np.int64) * self._npad + flat

    def ghost_slot_index(self, coords: np.ndarray, qs: np.ndarray) -> np.ndarray:
        """Halo cells live in the padded box, so the straight formula
        covers them too."""
        return self.slot_index(coords, qs)

    def read_slots(self, idx: np.ndarray) -> np.ndarray:
        return self._f.reshape(-1)[idx]

    def write_slots(self, idx: np.ndarray, values: np.ndarray) -> None:
        self._f.reshape(-1)[idx] = values

    # -- bookkeeping ---------------------------------------------------------

    def pdf_element_count(self) -> int:
        buffers = 2 if self.pattern == "pull" else 1
        return buffers * self.stencil.q * int(np.prod(self.dims))

    def idx_element_count(self) -> int:
        return 0

    @property
    def n_interior(self) -> int:
        """Sweep size of the interior subset (box cells, solids included)."""
        if "interior" in self._phases:
            return int(self._phases["interior"].cols.size)
        return int(np.prod(self.dims))

    @property
    def n_frame(self) -> int:
        return int(self._phases["frame"].cols.size) if "frame" in self._phases else 0
