"""Slow, loop-based reference implementations used as oracles.

Everything here is written per cell with plain Python loops and scalar
accumulation, deliberately sharing no code with the package's engines:
no gather tables, no slot arithmetic, no batched kernels.  Agreement
between an engine and these routines is therefore evidence about the
engine, not about a shared bug.

State is a (q,) + rev_shape(dims) float array holding the canonical
(post-stream, pre-collide-consumed) values; non-fluid cells stay zero.
"""

from __future__ import annotations

import numpy as np

from slbm.flags import FLUID, NOSLIP, UBB, FlagField, rev_shape

CS2 = 1.0 / 3.0


def cell_equilibrium(rho, u, c, w):
    """Second-order polynomial equilibrium for one cell."""
    q = len(w)
    usq = float(np.dot(u, u))
    out = np.empty(q)
    for qi in range(q):
        cu = float(np.dot(c[qi], u))
        out[qi] = w[qi] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq)
    return out


def cell_moments(vals, c):
    rho = 0.0
    for v in vals:
        rho += float(v)
    dim = c.shape[1]
    u = np.zeros(dim)
    for qi in range(len(vals)):
        for a in range(dim):
            u[a] += c[qi, a] * float(vals[qi])
    return rho, u / rho


def cell_collide(vals, c, w, omega, model="srt", lambda_odd=None, inv=None):
    rho, u = cell_moments(vals, c)
    feq = cell_equilibrium(rho, u, c, w)
    if model == "srt":
        return vals - omega * (vals - feq)
    out = np.empty_like(vals)
    for qi in range(len(vals)):
        qb = inv[qi]
        sym = 0.5 * (vals[qi] + vals[qb])
        asym = 0.5 * (vals[qi] - vals[qb])
        sym_eq = 0.5 * (feq[qi] + feq[qb])
        asym_eq = 0.5 * (feq[qi] - feq[qb])
        out[qi] = vals[qi] - omega * (sym - sym_eq) - lambda_odd * (asym - asym_eq)
    return out


def naive_step(
    f: np.ndarray,
    flags: FlagField,
    stencil,
    omega: float,
    model: str = "srt",
    lambda_odd: float | None = None,
) -> np.ndarray:
    """One pull-stream + collide update of every fluid cell.

    Reads across the box edge consult the flag ring: fluid means a
    wrapped periodic image (the wrap is applied to the coordinate
    first), walls fold back the cell's own opposite-direction value,
    moving walls add the wall-momentum term on top.
    """
    c = stencil.c
    w = stencil.w
    inv = stencil.inv
    q = stencil.q
    dim = stencil.dim
    dims = flags.dims
    shape = rev_shape(dims)
    new = f.copy()

    for rev in np.ndindex(shape):
        here = tuple(int(x) + 1 for x in rev)
        if int(flags.tags[here]) != FLUID:
            continue
        vals = np.empty(q)
        for qi in range(q):
            src = [rev[a] - int(c[qi, dim - 1 - a]) for a in range(dim)]
            for a in range(dim):
                if flags.periodic[dim - 1 - a]:
                    src[a] %= shape[a]
            spad = tuple(s + 1 for s in src)
            tag = int(flags.tags[spad])
            if tag == FLUID:
                vals[qi] = f[(qi,) + tuple(src)]
            elif tag == NOSLIP:
                vals[qi] = f[(inv[qi],) + rev]
            elif tag == UBB:
                uw = flags.ubb_u[spad]
                cu = float(np.dot(c[qi], uw))
                vals[qi] = f[(inv[qi],) + rev] + 2.0 * w[qi] * cu / CS2
            else:
                raise AssertionError(f"unexpected tag {tag} upwind of a fluid cell")
        out = cell_collide(vals, c, w, omega, model, lambda_odd, inv)
        for qi in range(q):
            new[(qi,) + rev] = out[qi]
    return new


def naive_stream(f: np.ndarray, flags: FlagField, stencil) -> np.ndarray:
    """Pull streaming plus boundary folds only, no collision.

    The in-place engines' mid-pair state (after the combined step,
    before the reversed one) equals this applied to the post-collision
    field, so tests can pin that contract down exactly.
    """
    c = stencil.c
    w = stencil.w
    inv = stencil.inv
    dim = stencil.dim
    shape = rev_shape(flags.dims)
    new = f.copy()
    for rev in np.ndindex(shape):
        here = tuple(int(x) + 1 for x in rev)
        if int(flags.tags[here]) != FLUID:
            continue
        for qi in range(stencil.q):
            src = [rev[a] - int(c[qi, dim - 1 - a]) for a in range(dim)]
            for a in range(dim):
                if flags.periodic[dim - 1 - a]:
                    src[a] %= shape[a]
            spad = tuple(s + 1 for s in src)
            tag = int(flags.tags[spad])
            if tag == FLUID:
                new[(qi,) + rev] = f[(qi,) + tuple(src)]
            elif tag == NOSLIP:
                new[(qi,) + rev] = f[(inv[qi],) + rev]
            else:
                uw = flags.ubb_u[spad]
                cu = float(np.dot(c[qi], uw))
                new[(qi,) + rev] = f[(inv[qi],) + rev] + 2.0 * w[qi] * cu / CS2
    return new


def run_naive(f, flags, stencil, omega, steps, model="srt", lambda_odd=None):
    for _ in range(steps):
        f = naive_step(f, flags, stencil, omega, model, lambda_odd)
    return f


def total_mass(f: np.ndarray) -> float:
    return float(f.sum())
