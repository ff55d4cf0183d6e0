"""Layout-independent collision mathematics.

The dense and the sparse engine both gather their per-cell distribution
values into a C-contiguous ``(q, n)`` work array and hand it to
:func:`collide`.  Keeping one shared code path (fixed accumulation order,
no BLAS reductions) means the two layouts produce bit-identical results
for identical inputs, which the equivalence tests rely on.

Velocity moments use the second-order polynomial equilibrium

    f_eq_i = w_i * rho * (1 + (c_i.u)/cs2 + (c_i.u)^2/(2 cs2^2) - u.u/(2 cs2))

and the single-relaxation-time update f' = f - omega (f - f_eq).  A
two-relaxation-time variant is available; with the odd rate equal to
omega it reduces to the single-rate update up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, NumericalInstabilityError
from .stencil import CS2, Stencil

#: Wall density used by velocity bounce-back boundaries.
UBB_WALL_DENSITY = 1.0


class Parity(Enum):
    """Storage state of an in-place field.

    EVEN: every slot (q, cell) holds the value traveling in direction q
    (the layout fields start in and return to after each full step pair).
    ODD: the state left behind by the combined pull-collide-push step,
    with values parked in opposite-direction slots.  The step consumed
    from EVEN storage is the combined one; the step consumed from ODD
    storage is the cell-local reversed-read one.  Parity flips each step.
    """

    EVEN = 0
    ODD = 1

    def flipped(self) -> "Parity":
        return Parity(1 - self.value)


@dataclass
class CollisionParams:
    """Relaxation configuration for the collision step.

    omega is the (single) relaxation rate, valid in the open interval
    (0, 2).  model selects "srt" or "trt"; for "trt" the odd-moment rate
    lambda_odd must be given (even moments always relax with omega).
    """

    omega: float
    model: str = "srt"
    lambda_odd: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.omega < 2.0:
            raise ConfigurationError(f"omega must lie in (0, 2), got {self.omega}")
        if self.model not in ("srt", "trt"):
            raise ConfigurationError(f"unknown collision model {self.model!r}")
        if self.model == "trt":
            if self.lambda_odd is None:
                raise ConfigurationError("trt requires lambda_odd")
            if not 0.0 < self.lambda_odd < 2.0:
                raise ConfigurationError(
                    f"lambda_odd must lie in (0, 2), got {self.lambda_odd}"
                )


@dataclass
class Macroscopics:
    rho: float
    u: np.ndarray


def omega_from_viscosity(nu: float) -> float:
    """Relaxation rate for a kinematic viscosity in lattice units."""
    if nu <= 0.0:
        raise ConfigurationError(f"viscosity must be positive, got {nu}")
    return 1.0 / (nu / CS2 + 0.5)


def viscosity_from_omega(omega: float) -> float:
    if not 0.0 < omega < 2.0:
        raise ConfigurationError(f"omega must lie in (0, 2), got {omega}")
    return CS2 * (1.0 / omega - 0.5)


def moments(t: np.ndarray, stencil: Stencil, check: bool = True):
    """Density and velocity for a (q, n) batch of distribution values.

    Returns (rho, u) with shapes (n,) and (dim, n).  Raises
    NumericalInstabilityError when any density is non-positive or
    non-finite, so a diverging run fails loudly instead of streaming NaNs.
    """
    # accumulate row by row so the float addition order is fixed by the
    # stencil, not by the batch's memory layout
    rho = t[0] + t[1]
    for qi in range(2, stencil.q):
        rho += t[qi]
    if check and (not np.isfinite(rho).all() or (rho <= 0.0).any()):
        raise NumericalInstabilityError(
            "non-positive or non-finite density in collision input"
        )
    n = t.shape[1]
    u = np.zeros((stencil.dim, n))
    c = stencil.c
    for a in range(stencil.dim):
        acc = u[a]
        for qi in range(stencil.q):
            ca = c[qi, a]
            if ca == 1:
                acc += t[qi]
            elif ca == -1:
                acc -= t[qi]
    u /= rho
    return rho, u


def equilibrium_fields(rho: np.ndarray, u: np.ndarray, stencil: Stencil) -> np.ndarray:
    """Equilibrium distributions for (n,) densities and (dim, n) velocities."""
    rho = np.asarray(rho, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    usq = u[0] * u[0]
    for a in range(1, stencil.dim):
        usq = usq + u[a] * u[a]
    out = np.empty((stencil.q, rho.shape[0]))
    c = stencil.c
    w = stencil.w
    for qi in range(stencil.q):
        cu = np.zeros_like(rho)
        for a in range(stencil.dim):
            ca = c[qi, a]
            if ca == 1:
                cu += u[a]
            elif ca == -1:
                cu -= u[a]
        out[qi] = w[qi] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq)
    return out


def collide(t: np.ndarray, params: CollisionParams, stencil: Stencil) -> np.ndarray:
    """Post-collision values for a (q, n) batch; does not modify ``t``."""
    rho, u = moments(t, stencil)
    feq = equilibrium_fields(rho, u, stencil)
    if params.model == "srt":
        return t - params.omega * (t - feq)
    return _collide_trt(t, feq, params, stencil)


def _collide_trt(t, feq, params, stencil):
    inv = stencil.inv
    omega_e = params.omega
    omega_o = params.lambda_odd
    out = np.empty_like(t)
    for qi in range(stencil.q):
        qb = inv[qi]
        sym = 0.5 * (t[qi] + t[qb])
        asym = 0.5 * (t[qi] - t[qb])
        sym_eq = 0.5 * (feq[qi] + feq[qb])
        asym_eq = 0.5 * (feq[qi] - feq[qb])
        out[qi] = t[qi] - omega_e * (sym - sym_eq) - omega_o * (asym - asym_eq)
    return out


def ubb_correction(stencil: Stencil, qi: int, u_wall: np.ndarray) -> np.ndarray:
    """Momentum term added to a bounced distribution at a moving wall.

    ``qi`` is the pulled direction (pointing from the wall into the
    fluid), ``u_wall`` the wall velocity with shape (..., dim).  The wall
    density is fixed at 1.
    """
    u_wall = np.asarray(u_wall, dtype=np.float64)
    cu = np.zeros(u_wall.shape[:-1])
    for a in range(stencil.dim):
        ca = stencil.c[qi, a]
        if ca == 1:
            cu += u_wall[..., a]
        elif ca == -1:
            cu -= u_wall[..., a]
    return 2.0 * stencil.w[qi] * UBB_WALL_DENSITY * cu / CS2


# Scalar wrappers around the batched kernels.  Using the same code path
# keeps single-cell results identical to what the engines compute.


def macroscopic(f: np.ndarray, stencil: Stencil) -> Macroscopics:
    """Density and velocity of a single cell's q distribution values."""
    t = np.asarray(f, dtype=np.float64).reshape(stencil.q, 1)
    rho, u = moments(t, stencil)
    return Macroscopics(rho=float(rho[0]), u=u[:, 0].copy())


def equilibrium(m: Macroscopics, stencil: Stencil) -> np.ndarray:
    rho = np.array([m.rho], dtype=np.float64)
    u = np.asarray(m.u, dtype=np.float64).reshape(stencil.dim, 1)
    return equilibrium_fields(rho, u, stencil)[:, 0]


def collide_srt(f: np.ndarray, params: CollisionParams, stencil: Stencil) -> np.ndarray:
    t = np.asarray(f, dtype=np.float64).reshape(stencil.q, 1)
    p = CollisionParams(omega=params.omega)
    return collide(t, p, stencil)[:, 0]


def collide_trt(f: np.ndarray, params: CollisionParams, stencil: Stencil) -> np.ndarray:
    if params.model != "trt":
        raise ConfigurationError("collide_trt requires params.model == 'trt'")
    t = np.asarray(f, dtype=np.float64).reshape(stencil.q, 1)
    return collide(t, params, stencil)[:, 0]
