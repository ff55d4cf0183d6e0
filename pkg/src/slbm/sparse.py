"""Indirect-addressing block engine.

Keeps values only for fluid cells, in one flat array laid out as Q
direction-major groups.  Group q starts with the per-fluid-cell values
(cell order is the same lexicographic order the direct engine gathers
in), followed by slots appended for moving-wall reads (one per
referencing cell, in cell order) and for halo reads from neighbor
blocks (sorted by halo-face offset, then position).  A (Q-1, n_fluid)
table of 4-byte absolute locations resolves every non-center read; the
center value is contiguous and needs no table.

Resting walls need no extra slots: the table entry folds back to the
cell's own opposite-direction slot.  Moving-wall slots are refreshed
from their interior partner slot before each step (plus the wall
momentum term); the refresh is parity-aware for the in-place pattern
and idempotent, so drivers may repeat it.  Appended slots are poisoned
with NaN at init so an unrefreshed read is loud.

The combined in-place step writes each result back through the same
table entry it read from; location ownership is unique (asserted), so
the vectorized scatter is race-free and interior/frame sweeps compose
bitwise-identically to a whole-block sweep.
"""

from __future__ import annotations

import numpy as np

from . import core
from .core import CollisionParams, Parity
from .counters import Counters
from .errors import ConfigurationError, EmptyBlockError, ProtocolError
from .flags import (
    EXCHANGE,
    FLUID,
    NOSLIP,
    UBB,
    FlagField,
    frame_mask,
    rev_shape,
    ring_offset,
)
from .stencil import Stencil

PATTERNS = ("pull", "aa")


class SparseEngine:
    layout = "sparse"

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
        pos = np.argwhere(flags.tags_interior == FLUID)
        if pos.shape[0] == 0:
            raise EmptyBlockError(f"block {self.dims} has no fluid cells")
        self.n_fluid = int(pos.shape[0])
        self.fluid_coords = np.ascontiguousarray(pos[:, ::-1])

        self._build_lists(pos)

        self.frame_width = frame_width
        all_cols = np.arange(self.n_fluid)
        self._cols = {"all": all_cols}
        if frame_width is not None:
            fmask_flat = frame_mask(self.dims, frame_width).reshape(-1)
            int_flat = np.ravel_multi_index(pos.T, rev_shape(self.dims))
            in_frame = fmask_flat[int_flat]
            self._cols["frame"] = all_cols[in_frame]
            self._cols["interior"] = all_cols[~in_frame]

        self._pdf = np.full(self.total_slots, np.nan)
        self._tmp = np.full(self.total_slots, np.nan) if pattern == "pull" else None
        self.parity = Parity.EVEN
        self.counters = Counters()

    # -- build ---------------------------------------------------------------

    def _build_lists(self, pos):
        st = self.stencil
        q, dim = st.q, st.dim
        n = self.n_fluid
        tags_flat = self.flags.tags.reshape(-1)
        ubb_flat = self.flags.ubb_u.reshape(-1, dim)
        c_arr = st.c[:, ::-1]

        self._x_flat = np.ravel_multi_index((pos + 1).T, self._padded_shape)
        cid_map = np.full(int(np.prod(self._padded_shape)), -1, dtype=np.int64)
        cid_map[self._x_flat] = np.arange(n)
        self._cid_map = cid_map

        # pass 1: classify every (direction, cell) read by its upwind tag
        src_flat = np.empty((q, n), dtype=np.int64)
        src_tag = np.empty((q, n), dtype=np.uint8)
        for qi in range(1, q):
            src = pos - c_arr[qi]
            for axis, per in enumerate(self.flags.periodic):
                if per:
                    arr_axis = dim - 1 - axis
                    src[:, arr_axis] %= self.dims[axis]
            src_flat[qi] = np.ravel_multi_index((src + 1).T, self._padded_shape)
            src_tag[qi] = tags_flat[src_flat[qi]]

        n_ubb = np.zeros(q, dtype=np.int64)
        n_ghost = np.zeros(q, dtype=np.int64)
        for qi in range(1, q):
            n_ubb[qi] = int(np.count_nonzero(src_tag[qi] == UBB))
            n_ghost[qi] = int(np.count_nonzero(src_tag[qi] == EXCHANGE))

        group_sizes = n + n_ubb + n_ghost
        group_sizes[0] = n
        self.base = np.concatenate(([0], np.cumsum(group_sizes)))
        self.total_slots = int(self.base[-1])
        if self.total_slots >= 2**32:
            raise ConfigurationError(
                f"{self.total_slots} slots exceed the 4-byte location table range"
            )
        self.n_ubb_slots = int(n_ubb.sum())
        self.n_ghost_slots = int(n_ghost.sum())

        # pass 2: hand out appended slot ids and fill the location table
        idx = np.empty((q - 1, n), dtype=np.int64)
        ghost_slots: dict[tuple[int, int], int] = {}
        ubb_slot_list = []
        ubb_partner_list = []
        ubb_corr_list = []
        for qi in range(1, q):
            tag = src_tag[qi]
            row = np.empty(n, dtype=np.int64)

            at = tag == FLUID
            src_cid = cid_map[src_flat[qi][at]]
            assert np.all(src_cid >= 0), "fluid upwind cell missing from cell list"
            row[at] = self.base[qi] + src_cid

            at = tag == NOSLIP
            row[at] = self.base[st.inv[qi]] + np.nonzero(at)[0]

            at = np.nonzero(tag == UBB)[0]
            slots = self.base[qi] + n + np.arange(at.size)
            row[at] = slots
            ubb_slot_list.append(slots)
            ubb_partner_list.append(self.base[st.inv[qi]] + at)
            ubb_corr_list.append(
                core.ubb_correction(st, qi, ubb_flat[src_flat[qi][at]])
            )

            at = np.nonzero(tag == EXCHANGE)[0]
            if at.size:
                p_flat = src_flat[qi][at]
                p_coord = np.stack(np.unravel_index(p_flat, self._padded_shape), axis=1)
                p_pub = p_coord[:, ::-1] - 1
                sigmas = [ring_offset(tuple(c), self.dims) for c in p_pub]
                order = sorted(
                    range(at.size), key=lambda i: (sigmas[i], int(p_flat[i]))
                )
                start = self.base[qi] + n + n_ubb[qi]
                for rank, i in enumerate(order):
                    slot = int(start + rank)
                    row[at[i]] = slot
                    ghost_slots[(qi, int(p_flat[i]))] = slot
            idx[qi - 1] = row

        flat_all = np.concatenate((np.arange(n), idx.ravel()))
        assert np.unique(flat_all).size == flat_all.size, (
            "each slot must belong to exactly one (direction, cell) pair"
        )
        self.idx = idx.astype(np.uint32)
        self._ghost_slots = ghost_slots
        if ubb_slot_list:
            self._ubb_slots = np.concatenate(ubb_slot_list)
            self._ubb_partner = np.concatenate(ubb_partner_list)
            self._ubb_corr = np.concatenate(ubb_corr_list)
        else:
            self._ubb_slots = np.empty(0, dtype=np.int64)
            self._ubb_partner = np.empty(0, dtype=np.int64)
            self._ubb_corr = np.empty(0)

    # -- state init ----------------------------------------------------------

    def init_canonical(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.stencil.q, self.n_fluid):
            raise ConfigurationError(
                f"expected state shape {(self.stencil.q, self.n_fluid)}, got {values.shape}"
            )
        self._pdf.fill(np.nan)
        if self._tmp is not None:
            self._tmp.fill(np.nan)
        for r in range(self.stencil.q):
            self._pdf[self.base[r] : self.base[r] + self.n_fluid] = values[r]
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
        if phase not in self._cols:
            raise ConfigurationError(
                f"{phase!r} sweep needs split lists; build with frame_width"
            )
        cols = self._cols[phase]
        if self.pattern == "pull":
            self._step_pull(cols)
            table_reads = True
        elif self.parity is Parity.EVEN:
            self._step_combined(cols)
            table_reads = True
        else:
            self._step_reversed(cols)
            table_reads = False
        self._count(phase, cols.size, table_reads)

    def finish_step(self) -> None:
        if self.pattern == "pull":
            self._pdf, self._tmp = self._tmp, self._pdf
            self._begun = False
        else:
            self.parity = self.parity.flipped()
        self.counters.steps += 1

    def _gather_state(self, cols) -> np.ndarray:
        t = np.empty((self.stencil.q, cols.size))
        t[0] = self._pdf[cols]
        t[1:] = self._pdf[self.idx[:, cols]]
        return t

    def _step_pull(self, cols) -> None:
        if cols.size == 0:
            return
        out = core.collide(self._gather_state(cols), self.params, self.stencil)
        for r in range(self.stencil.q):
            self._tmp[self.base[r] + cols] = out[r]

    def _step_combined(self, cols) -> None:
        if cols.size == 0:
            return
        out = core.collide(self._gather_state(cols), self.params, self.stencil)
        self._pdf[cols] = out[0]
        inv = self.stencil.inv
        for r in range(1, self.stencil.q):
            self._pdf[self.idx[r - 1, cols]] = out[inv[r]]

    def _step_reversed(self, cols) -> None:
        if cols.size == 0:
            return
        inv = self.stencil.inv
        t = np.empty((self.stencil.q, cols.size))
        for r in range(self.stencil.q):
            t[r] = self._pdf[self.base[inv[r]] + cols]
        out = core.collide(t, self.params, self.stencil)
        for r in range(self.stencil.q):
            self._pdf[self.base[r] + cols] = out[r]

    def _count(self, phase, m, table_reads) -> None:
        c = self.counters
        c.cells_visited += m
        if phase == "interior":
            c.cells_visited_interior += m
        elif phase == "frame":
            c.cells_visited_frame += m
        c.pdf_accesses += 2 * self.stencil.q * m
        if table_reads:
            c.idx_reads += (self.stencil.q - 1) * m

    def refresh_boundary(self, parity: Parity) -> None:
        """Bring moving-wall slots (before a table-read step) or their
        interior partner slots (before a reversed-read step) up to date.
        Idempotent either way."""
        if self._ubb_slots.size == 0:
            return
        if parity is Parity.EVEN:
            self._pdf[self._ubb_slots] = self._pdf[self._ubb_partner] + self._ubb_corr
        else:
            self._pdf[self._ubb_partner] = self._pdf[self._ubb_slots] + self._ubb_corr

    # -- inspection ----------------------------------------------------------

    def canonical_state(self) -> np.ndarray:
        """(q, n_fluid) direction-q values per fluid cell; see the
        direct engine for the mid-pair (odd parity) semantics."""
        n = self.n_fluid
        t = np.empty((self.stencil.q, n))
        if self.parity is Parity.EVEN:
            for r in range(self.stencil.q):
                t[r] = self._pdf[self.base[r] : self.base[r] + n]
        else:
            self.refresh_boundary(Parity.ODD)
            inv = self.stencil.inv
            for r in range(self.stencil.q):
                t[r] = self._pdf[self.base[inv[r]] : self.base[inv[r]] + n]
        return t

    def macroscopic_fields(self) -> tuple[np.ndarray, np.ndarray]:
        rho, u = core.moments(self.canonical_state(), self.stencil)
        shape = rev_shape(self.dims)
        int_flat = np.ravel_multi_index((self.fluid_coords[:, ::-1]).T, shape)
        rho_field = np.zeros(shape)
        rho_field.reshape(-1)[int_flat] = rho
        u_field = np.zeros(shape + (self.stencil.dim,))
        u_field.reshape(-1, self.stencil.dim)[int_flat] = u.T
        return rho_field, u_field

    # -- exchange access -----------------------------------------------------

    def slot_index(self, coords: np.ndarray, qs: np.ndarray) -> np.ndarray:
        """Per-fluid-cell slot of direction ``qs`` at interior public
        coordinates ``coords``."""
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.stencil.dim)
        flat = np.ravel_multi_index((coords[:, ::-1] + 1).T, self._padded_shape)
        cid = self._cid_map[flat]
        if np.any(cid < 0):
            raise ProtocolError("exchange addressed a non-fluid cell slot")
        return self.base[np.asarray(qs, dtype=np.int64)] + cid

    def ghost_slot_index(self, coords: np.ndarray, qs: np.ndarray) -> np.ndarray:
        """Appended halo slot for direction ``qs`` at halo public
        coordinates (components -1 or extent allowed)."""
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.stencil.dim)
        qs = np.asarray(qs, dtype=np.int64).reshape(-1)
        flat = np.ravel_multi_index((coords[:, ::-1] + 1).T, self._padded_shape)
        out = np.empty(qs.size, dtype=np.int64)
        for i in range(qs.size):
            key = (int(qs[i]), int(flat[i]))
            try:
                out[i] = self._ghost_slots[key]
            except KeyError:
                raise ProtocolError(
                    f"exchange asked for halo slot {key} that no cell reads"
                ) from None
        return out

    def read_slots(self, idx: np.ndarray) -> np.ndarray:
        return self._pdf[idx]

    def write_slots(self, idx: np.ndarray, values: np.ndarray) -> None:
        self._pdf[idx] = values

    # -- bookkeeping ---------------------------------------------------------

    def pdf_element_count(self) -> int:
        buffers = 2 if self.pattern == "pull" else 1
        return buffers * self.total_slots

    def idx_element_count(self) -> int:
        return (self.stencil.q - 1) * self.n_fluid

    @property
    def n_interior(self) -> int:
        return int(self._cols["interior"].size) if "interior" in self._cols else self.n_fluid

    @property
    def n_frame(self) -> int:
        return int(self._cols["frame"].size) if "frame" in self._cols else 0
