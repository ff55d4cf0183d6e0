"""Halo exchange between blocks and the communication-hiding step drivers.

A directed edge (src block, dst block, offset vector) carries one
message per exchange phase.  Offsets range over the stencil's nonzero
directions, so axis faces, edges, and corners each get their own
messages exactly when some direction crosses them.  Message entries are
enumerated cell-major over the owning block's boundary layer for that
offset (lexicographic cell order, then the crossing-direction subset in
stencil order); both endpoints derive the same ordering independently
because blocks cut from one tensor grid share coordinate ranges on
every axis the offset leaves at zero.

Two phases exist.  The canonical phase runs before any table-read step
(pull, or the combined in-place step) and ships the sender's outermost
values into the receiver's halo slots.  The combined in-place step then
parks boundary-crossing results in the sender's own halo ring, so the
reversed phase runs before the following reversed-read step and ships
those parked values into the receiver's interior opposite-direction
slots.  Wire formats: a dense sender sends its whole layer, including
undefined filler at positions holding no exchanged value (solid resting
weights or NaN); a sparse sender sends exactly the slots it has.
Receivers store only entries whose two endpoint cells are both fluid,
which is precisely when a receiving slot exists, so filler is never
stored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from time import perf_counter

import numpy as np

from .core import Parity
from .errors import ConfigurationError, FormatError, ProtocolError
from .flags import FLUID
from .stencil import Stencil

MESSAGE_MAGIC = b"SLBMMSG1"
_HEADER = struct.Struct("<8sII3bBBI")
_LAYOUT_CODES = {"dense": 0, "sparse": 1}
_LAYOUT_NAMES = {v: k for k, v in _LAYOUT_CODES.items()}


class Phase(Enum):
    CANONICAL = 0
    REVERSED = 1


def direction_subset(stencil: Stencil, tau: tuple[int, ...]) -> tuple[int, ...]:
    """Directions crossing a boundary with offset ``tau``: every nonzero
    component of tau must match; components over tau's zero axes are
    free (those directions cross the same face slantwise)."""
    if not any(tau):
        raise ConfigurationError("offset vector must be nonzero")
    out = []
    for qi in range(1, stencil.q):
        if all(
            stencil.c[qi][a] == tau[a]
            for a in range(stencil.dim)
            if tau[a] != 0
        ):
            out.append(qi)
    return tuple(out)


def analytic_payload(dims: tuple[int, ...], tau: tuple[int, ...], stencil: Stencil) -> int:
    """Whole-layer entry count: |direction subset| x layer cell count."""
    n = len(direction_subset(stencil, tau))
    for axis, t in enumerate(tau):
        if t == 0:
            n *= dims[axis]
    return n


def _layer_cells(dims: tuple[int, ...], tau: tuple[int, ...]) -> np.ndarray:
    """Public coords of the boundary layer toward ``tau``, in canonical
    (z-major) cell order."""
    ranges = []
    for arr_axis in range(len(dims)):
        axis = len(dims) - 1 - arr_axis
        if tau[axis] == 1:
            ranges.append(np.asarray([dims[axis] - 1]))
        elif tau[axis] == -1:
            ranges.append(np.asarray([0]))
        else:
            ranges.append(np.arange(dims[axis]))
    grids = np.meshgrid(*ranges, indexing="ij")
    cells_rev = np.stack([g.ravel() for g in grids], axis=1)
    return np.ascontiguousarray(cells_rev[:, ::-1])


def _tags_at(flags, coords: np.ndarray) -> np.ndarray:
    arr = np.asarray(coords)[:, ::-1] + 1
    flat = np.ravel_multi_index(arr.T, flags.tags.shape)
    return flags.tags.reshape(-1)[flat]


@dataclass
class FaceMessage:
    src: int
    dst: int
    sigma: tuple[int, ...]
    phase: Phase
    layout: str
    subset: tuple[int, ...]
    values: np.ndarray


class _PhasePlan:
    __slots__ = (
        "subset",
        "n_full",
        "n_wire",
        "send_sel",
        "tgt_sel",
        "pos_from_full",
        "pos_from_sparse",
        "sparse_in_full",
    )


class EdgePlan:
    """Everything one directed edge needs, precomputed: sender read
    slots, receiver write slots, and payload-position maps between the
    dense (whole-layer) and sparse (existing-slots) wire formats."""

    def __init__(self, src_bid, dst_bid, sigma, stencil, src_engine, dst_engine):
        if src_engine.pattern != dst_engine.pattern:
            raise ConfigurationError("blocks must share one streaming pattern")
        for axis, t in enumerate(sigma):
            if t == 0 and src_engine.dims[axis] != dst_engine.dims[axis]:
                raise ConfigurationError(
                    "adjacent blocks must share extents on in-face axes"
                )
        self.src_bid = src_bid
        self.dst_bid = dst_bid
        self.sigma = tuple(sigma)
        self.stencil = stencil
        self.src_engine = src_engine
        self.dst_engine = dst_engine
        self.phases = {Phase.CANONICAL: self._build(Phase.CANONICAL)}
        if src_engine.pattern == "aa":
            self.phases[Phase.REVERSED] = self._build(Phase.REVERSED)

    def _build(self, phase: Phase) -> _PhasePlan:
        st = self.stencil
        sigma = self.sigma
        canonical = phase is Phase.CANONICAL
        owner = self.src_engine if canonical else self.dst_engine
        partner = self.dst_engine if canonical else self.src_engine
        tau = sigma if canonical else tuple(-t for t in sigma)

        subset = direction_subset(st, tau)
        cells = _layer_cells(owner.dims, tau)
        ns = len(subset)
        ecells = np.repeat(cells, ns, axis=0)
        eqs = np.tile(np.asarray(subset, dtype=np.int64), len(cells))
        n_full = len(eqs)

        # image of the owner layer in the partner's frame (halo coords)
        shift = np.zeros(st.dim, dtype=np.int64)
        for axis, t in enumerate(sigma):
            if t == 1:
                shift[axis] = -self.src_engine.dims[axis]
            elif t == -1:
                shift[axis] = self.dst_engine.dims[axis]
        if not canonical:
            shift = -shift
        eimg = ecells + shift

        # streamed-to partner cell, wrapped where the partner block spans
        # a periodic axis (its storage wraps those reads in-box too)
        epartner = eimg + st.c[eqs]
        for axis, per in enumerate(partner.flags.periodic):
            if per:
                epartner[:, axis] %= partner.dims[axis]
        in_box = np.ones(n_full, dtype=bool)
        for axis in range(st.dim):
            in_box &= (epartner[:, axis] >= 0) & (
                epartner[:, axis] < partner.dims[axis]
            )

        owner_fluid = _tags_at(owner.flags, ecells) == FLUID
        partner_fluid = np.zeros(n_full, dtype=bool)
        if in_box.any():
            partner_fluid[in_box] = (
                _tags_at(partner.flags, epartner[in_box]) == FLUID
            )
        storable = owner_fluid & in_box & partner_fluid
        wire = owner_fluid if canonical else storable

        pp = _PhasePlan()
        pp.subset = subset
        pp.n_full = n_full
        pp.n_wire = int(wire.sum())
        pp.pos_from_full = np.nonzero(storable)[0]
        pp.pos_from_sparse = np.nonzero(storable[wire])[0]
        pp.sparse_in_full = np.nonzero(wire)[0]

        if self.src_engine.layout == "dense":
            send_cells, send_qs = (ecells, eqs) if canonical else (eimg, eqs)
        else:
            send_cells = ecells[wire] if canonical else eimg[wire]
            send_qs = eqs[wire]
        if canonical:
            pp.send_sel = self.src_engine.slot_index(send_cells, send_qs)
        else:
            pp.send_sel = self.src_engine.ghost_slot_index(send_cells, send_qs)

        if canonical:
            pp.tgt_sel = self.dst_engine.ghost_slot_index(
                eimg[storable], eqs[storable]
            )
        else:
            pp.tgt_sel = self.dst_engine.slot_index(ecells[storable], eqs[storable])
        return pp


def pack(plan: EdgePlan, phase: Phase) -> FaceMessage:
    if phase not in plan.phases:
        raise ProtocolError(f"edge has no {phase.name} plan for this pattern")
    pp = plan.phases[phase]
    eng = plan.src_engine
    values = eng.read_slots(pp.send_sel)
    eng.counters.values_exchanged += values.size
    eng.counters.messages += 1
    return FaceMessage(
        plan.src_bid, plan.dst_bid, plan.sigma, phase, eng.layout, pp.subset, values
    )


def unpack(plan: EdgePlan, msg: FaceMessage) -> None:
    if (msg.src, msg.dst, msg.sigma) != (plan.src_bid, plan.dst_bid, plan.sigma):
        raise ProtocolError(
            f"message routed to wrong edge: got {(msg.src, msg.dst, msg.sigma)}, "
            f"expected {(plan.src_bid, plan.dst_bid, plan.sigma)}"
        )
    pp = plan.phases[msg.phase]
    if msg.layout == "dense":
        expected, take = pp.n_full, pp.pos_from_full
    elif msg.layout == "sparse":
        expected, take = pp.n_wire, pp.pos_from_sparse
    else:
        raise ProtocolError(f"unknown payload layout {msg.layout!r}")
    if msg.values.size != expected:
        raise ProtocolError(
            f"payload length {msg.values.size} != expected {expected} "
            f"({msg.layout} wire, {msg.phase.name})"
        )
    plan.dst_engine.write_slots(pp.tgt_sel, msg.values[take])


def convert_face(plan: EdgePlan, msg: FaceMessage) -> FaceMessage:
    """Rewrite a message into the other wire format: whole-layer with
    NaN sentinels <-> existing-slots-only."""
    pp = plan.phases[msg.phase]
    if msg.layout == "dense":
        if msg.values.size != pp.n_full:
            raise ProtocolError("payload length does not match the layer")
        values = msg.values[pp.sparse_in_full]
        layout = "sparse"
    else:
        if msg.values.size != pp.n_wire:
            raise ProtocolError("payload length does not match the slot list")
        values = np.full(pp.n_full, np.nan)
        values[pp.sparse_in_full] = msg.values
        layout = "dense"
    return FaceMessage(
        msg.src, msg.dst, msg.sigma, msg.phase, layout, msg.subset, values
    )


def encode_message(msg: FaceMessage) -> bytes:
    sig3 = tuple(msg.sigma) + (0,) * (3 - len(msg.sigma))
    header = _HEADER.pack(
        MESSAGE_MAGIC,
        msg.src,
        msg.dst,
        sig3[0],
        sig3[1],
        sig3[2],
        msg.phase.value,
        _LAYOUT_CODES[msg.layout],
        msg.values.size,
    )
    return header + np.ascontiguousarray(msg.values, dtype="<f8").tobytes()


def decode_message(data: bytes, dim: int = 3) -> FaceMessage:
    if len(data) < _HEADER.size:
        raise FormatError(f"message truncated at offset {len(data)}: header needs {_HEADER.size} bytes")
    magic, src, dst, s0, s1, s2, phase, layout, count = _HEADER.unpack_from(data)
    if magic != MESSAGE_MAGIC:
        raise FormatError(f"bad magic at offset 0: {magic!r}")
    end = _HEADER.size + 8 * count
    if len(data) < end:
        raise FormatError(f"message truncated at offset {len(data)}: need {end} bytes")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=_HEADER.size).copy()
    return FaceMessage(
        src,
        dst,
        tuple((s0, s1, s2)[:dim]),
        Phase(phase),
        _LAYOUT_NAMES[layout],
        (),
        values,
    )


def phase_for(pattern: str, parity: Parity) -> Phase:
    if pattern == "pull" or parity is Parity.EVEN:
        return Phase.CANONICAL
    return Phase.REVERSED


def deliver(mailbox: dict, plan: EdgePlan, phase: Phase) -> FaceMessage:
    key = (plan.src_bid, plan.dst_bid, plan.sigma, phase)
    msg = mailbox.pop(key, None)
    if msg is None:
        raise ProtocolError(
            f"deadlock: block {plan.dst_bid} waits on {phase.name} message "
            f"from block {plan.src_bid} over {plan.sigma} that was never sent"
        )
    return msg


def timestep_sequential(domain) -> None:
    """Exchange everything, then step every block over all its cells."""
    phase = phase_for(domain.pattern, domain.parity)
    t0 = perf_counter()
    mailbox = {}
    for plan in domain.edge_plans:
        mailbox[(plan.src_bid, plan.dst_bid, plan.sigma, phase)] = pack(plan, phase)
    for plan in domain.edge_plans:
        unpack(plan, deliver(mailbox, plan, phase))
    span = perf_counter() - t0
    for block in domain.blocks.values():
        block.engine.refresh_boundary(block.engine.parity)
    for block in domain.blocks.values():
        block.engine.step("all")
    for block in domain.blocks.values():
        block.engine.finish_step()
    domain.overlap_samples.append((0.0, span))


def timestep_overlapped(domain) -> None:
    """Initiate sends, run the interior sweep while messages are in
    flight, then complete receives and sweep the frame.  Produces the
    same state as the sequential driver, bitwise."""
    phase = phase_for(domain.pattern, domain.parity)
    t0 = perf_counter()
    mailbox = {}
    for plan in domain.edge_plans:
        mailbox[(plan.src_bid, plan.dst_bid, plan.sigma, phase)] = pack(plan, phase)
    t1 = perf_counter()
    for block in domain.blocks.values():
        block.engine.refresh_boundary(block.engine.parity)
    t2 = perf_counter()
    for block in domain.blocks.values():
        block.engine.step("interior")
    t3 = perf_counter()
    for plan in domain.edge_plans:
        unpack(plan, deliver(mailbox, plan, phase))
    t4 = perf_counter()
    for block in domain.blocks.values():
        block.engine.step("frame")
    for block in domain.blocks.values():
        block.engine.finish_step()
    interior_span = t3 - t2
    exchange_span = (t1 - t0) + interior_span + (t4 - t3)
    domain.overlap_samples.append((interior_span, exchange_span))
