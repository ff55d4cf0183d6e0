"""Discrete velocity sets for the lattice Boltzmann kernels.

Everything downstream is parameterized by a Stencil: the Q lattice
directions, their quadrature weights, the opposite-direction permutation
and the lattice speed of sound.  Lattice units are used throughout
(dx = dt = 1), so cs^2 = 1/3 for every supported set.

The direction ordering is fixed and shared by all modules, so that slot q
means the same thing in a dense field and in a sparse list: the rest
direction comes first, then the axis-aligned directions, then the
diagonals with two nonzero components, then (D3Q27 only) the corner
directions, each group sorted lexicographically by component tuple.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import ConfigurationError

#: Lattice speed of sound squared (dx = dt = 1).
CS2 = 1.0 / 3.0

# Weight per direction family, keyed by the number of nonzero components.
_WEIGHTS = {
    "d2q9": {0: Fraction(4, 9), 1: Fraction(1, 9), 2: Fraction(1, 36)},
    "d3q19": {0: Fraction(1, 3), 1: Fraction(1, 18), 2: Fraction(1, 36)},
    "d3q27": {
        0: Fraction(8, 27),
        1: Fraction(2, 27),
        2: Fraction(1, 54),
        3: Fraction(1, 216),
    },
}

_DIM = {"d2q9": 2, "d3q19": 3, "d3q27": 3}

STENCIL_NAMES = tuple(sorted(_WEIGHTS))


@dataclass(frozen=True, eq=False)
class Stencil:
    """An immutable discrete velocity set.

    Attributes
    ----------
    name : canonical lower-case name ("d2q9", "d3q19", "d3q27")
    dim : spatial dimension (2 or 3)
    q : number of directions
    c : (q, dim) int array of lattice velocities, components ordered (x, y[, z])
    w : (q,) float64 weights
    w_exact : tuple of Fraction weights (exact rational values of ``w``)
    inv : (q,) int array with c[inv[i]] == -c[i]
    cs2 : lattice speed of sound squared
    """

    name: str
    dim: int
    q: int
    c: np.ndarray
    w: np.ndarray
    w_exact: tuple
    inv: np.ndarray
    cs2: float = CS2

    def opposite(self, i: int) -> int:
        return int(self.inv[i])

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"Stencil({self.name}, q={self.q})"


def make_stencil(name: str) -> Stencil:
    """Build one of the supported velocity sets by name.

    Raises ConfigurationError for unknown names.
    """
    key = name.lower()
    if key not in _WEIGHTS:
        raise ConfigurationError(
            f"unknown stencil {name!r}; supported: {', '.join(STENCIL_NAMES)}"
        )
    dim = _DIM[key]
    weights = _WEIGHTS[key]

    vectors = [
        v
        for v in product((-1, 0, 1), repeat=dim)
        if sum(a != 0 for a in v) in weights
    ]
    # Rest direction first, then by number of nonzero components, then
    # lexicographically within each group.
    vectors.sort(key=lambda v: (sum(a != 0 for a in v), v))

    c = np.array(vectors, dtype=np.int64)
    w_exact = tuple(weights[int(np.count_nonzero(v))] for v in c)
    w = np.array([float(f) for f in w_exact])

    index_of = {tuple(v): i for i, v in enumerate(vectors)}
    inv = np.array([index_of[tuple(-np.asarray(v))] for v in vectors], dtype=np.int64)

    c.setflags(write=False)
    w.setflags(write=False)
    inv.setflags(write=False)
    return Stencil(name=key, dim=dim, q=len(vectors), c=c, w=w, w_exact=w_exact, inv=inv)
