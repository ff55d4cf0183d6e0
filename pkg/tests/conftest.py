import numpy as np
import pytest

from slbm.core import CollisionParams, equilibrium_fields
from slbm.flags import FLUID, rev_shape
from slbm.stencil import make_stencil


@pytest.fixture(scope="session")
def d2q9():
    return make_stencil("d2q9")


@pytest.fixture(scope="session")
def d3q19():
    return make_stencil("d3q19")


@pytest.fixture(scope="session")
def d3q27():
    return make_stencil("d3q27")


@pytest.fixture
def params():
    return CollisionParams(omega=1.2)


def random_fields(flags, stencil, seed, amplitude=0.01):
    """Seeded near-equilibrium (rho, u) over the whole box."""
    rng = np.random.default_rng(seed)
    shape = rev_shape(flags.dims)
    rho = 1.0 + amplitude * rng.standard_normal(shape)
    u = amplitude * rng.standard_normal((stencil.dim,) + shape)
    return rho, u


def drive(engine, steps):
    """Single-block step loop with the driver's per-step sequence."""
    for _ in range(steps):
        engine.refresh_boundary(engine.parity)
        engine.step()
        engine.finish_step()


def seed_state(flags, stencil, seed, amplitude=0.01):
    """Matching initial states for an engine and the naive reference.

    Returns (values, f0): per-fluid-cell (q, n) canonical values in the
    engines' lexicographic cell order, and the same numbers scattered
    into a (q,) + box array with zeros at non-fluid cells.
    """
    rho, u = random_fields(flags, stencil, seed, amplitude)
    mask = flags.tags_interior == FLUID
    values = equilibrium_fields(
        rho[mask], u.reshape(stencil.dim, -1)[:, mask.reshape(-1)], stencil
    )
    f0 = np.zeros((stencil.q,) + mask.shape)
    f0[:, mask] = values
    return values, f0
