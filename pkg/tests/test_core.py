import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from slbm.core import (
    CollisionParams,
    Parity,
    collide,
    collide_srt,
    collide_trt,
    equilibrium,
    equilibrium_fields,
    macroscopic,
    moments,
    omega_from_viscosity,
    ubb_correction,
    viscosity_from_omega,
)
from slbm.errors import ConfigurationError, NumericalInstabilityError
from slbm.stencil import make_stencil

import reference


def _stencils():
    return [make_stencil(n) for n in ("d2q9", "d3q19", "d3q27")]


# -- relaxation-rate conversions ------------------------------------------------


def test_omega_viscosity_roundtrip():
    for nu in (0.01, 0.1, 1.0, 5.0):
        assert viscosity_from_omega(omega_from_viscosity(nu)) == pytest.approx(nu, rel=1e-14)
    assert omega_from_viscosity(1.0 / 6.0) == pytest.approx(1.0)


def test_omega_validation():
    with pytest.raises(ConfigurationError):
        omega_from_viscosity(0.0)
    with pytest.raises(ConfigurationError):
        omega_from_viscosity(-1.0)
    for bad in (0.0, 2.0, -0.3, 2.5):
        with pytest.raises(ConfigurationError):
            viscosity_from_omega(bad)


def test_collision_params_validation():
    with pytest.raises(ConfigurationError):
        CollisionParams(omega=2.0)
    with pytest.raises(ConfigurationError):
        CollisionParams(omega=1.0, model="mrt")
    with pytest.raises(ConfigurationError):
        CollisionParams(omega=1.0, model="trt")
    with pytest.raises(ConfigurationError):
        CollisionParams(omega=1.0, model="trt", lambda_odd=2.0)
    CollisionParams(omega=1.0, model="trt", lambda_odd=1.2)


def test_parity_flip():
    assert Parity.EVEN.flipped() is Parity.ODD
    assert Parity.ODD.flipped() is Parity.EVEN
    assert Parity.ODD.flipped().flipped() is Parity.ODD


# -- moments and equilibrium -----------------------------------------------------


@pytest.mark.parametrize("st", _stencils(), ids=lambda s: s.name)
def test_moments_match_naive_per_cell(st):
    rng = np.random.default_rng(1)
    t = 0.05 + rng.random((st.q, 40))
    rho, u = moments(t, st)
    for j in range(t.shape[1]):
        r_ref, u_ref = reference.cell_moments(t[:, j], st.c)
        assert rho[j] == pytest.approx(r_ref, rel=1e-14)
        np.testing.assert_allclose(u[:, j], u_ref, rtol=1e-13, atol=1e-16)


@pytest.mark.parametrize("st", _stencils(), ids=lambda s: s.name)
def test_equilibrium_matches_naive(st):
    rng = np.random.default_rng(2)
    rho = 1.0 + 0.05 * rng.standard_normal(30)
    u = 0.05 * rng.standard_normal((st.dim, 30))
    feq = equilibrium_fields(rho, u, st)
    for j in range(30):
        ref = reference.cell_equilibrium(rho[j], u[:, j], st.c, st.w)
        np.testing.assert_allclose(feq[:, j], ref, rtol=1e-13, atol=1e-16)


@settings(max_examples=40, deadline=None)
@given(
    data=hst.data(),
    name=hst.sampled_from(["d2q9", "d3q19", "d3q27"]),
)
def test_equilibrium_moment_identity(data, name):
    # the quadrature reproduces the input density and momentum exactly
    st = make_stencil(name)
    rho = np.asarray(
        data.draw(
            hst.lists(hst.floats(0.5, 2.0), min_size=1, max_size=6), label="rho"
        )
    )
    n = rho.size
    u = np.asarray(
        [
            data.draw(hst.lists(hst.floats(-0.1, 0.1), min_size=n, max_size=n))
            for _ in range(st.dim)
        ]
    )
    feq = equilibrium_fields(rho, u, st)
    r2, u2 = moments(feq, st)
    np.testing.assert_allclose(r2, rho, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(u2, u, rtol=1e-10, atol=1e-12)


def test_equilibrium_at_rest_is_weights():
    for st in _stencils():
        feq = equilibrium_fields(np.ones(3), np.zeros((st.dim, 3)), st)
        np.testing.assert_array_equal(feq, np.repeat(st.w[:, None], 3, axis=1))


def test_moments_instability_check():
    st = make_stencil("d2q9")
    t = np.full((9, 4), -1.0)
    with pytest.raises(NumericalInstabilityError):
        moments(t, st)
    t2 = np.full((9, 4), np.nan)
    with pytest.raises(NumericalInstabilityError):
        moments(t2, st)
    moments(np.full((9, 4), -1.0), st, check=False)  # opt-out returns


def test_moments_accumulation_is_layout_invariant():
    # same values, C- and F-ordered batches: bit-identical results
    st = make_stencil("d3q19")
    rng = np.random.default_rng(3)
    t = 0.05 + rng.random((st.q, 257))
    tf = np.asfortranarray(t)
    r1, u1 = moments(t, st)
    r2, u2 = moments(tf, st)
    np.testing.assert_array_equal(r1, r2)
    np.testing.assert_array_equal(u1, u2)


# -- collision --------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(
    seed=hst.integers(0, 2**31),
    omega=hst.floats(0.1, 1.9),
    name=hst.sampled_from(["d2q9", "d3q19"]),
)
def test_collide_conserves_moments(seed, omega, name):
    st = make_stencil(name)
    rng = np.random.default_rng(seed)
    t = 0.02 + rng.random((st.q, 10)) * 0.1
    out = collide(t, CollisionParams(omega=omega), st)
    r1, u1 = moments(t, st)
    r2, u2 = moments(out, st)
    np.testing.assert_allclose(r2, r1, rtol=1e-13)
    np.testing.assert_allclose(u2 * r2, u1 * r1, rtol=1e-10, atol=1e-15)


def test_collide_fixed_point_at_equilibrium():
    for st in _stencils():
        rng = np.random.default_rng(4)
        rho = 1.0 + 0.05 * rng.standard_normal(8)
        u = 0.05 * rng.standard_normal((st.dim, 8))
        feq = equilibrium_fields(rho, u, st)
        out = collide(feq, CollisionParams(omega=1.7), st)
        np.testing.assert_allclose(out, feq, rtol=1e-12, atol=1e-15)


def test_collide_matches_naive_srt_and_trt():
    st = make_stencil("d3q19")
    rng = np.random.default_rng(5)
    t = 0.02 + rng.random((st.q, 12)) * 0.1
    srt = collide(t, CollisionParams(omega=1.3), st)
    trt = collide(t, CollisionParams(omega=1.3, model="trt", lambda_odd=0.9), st)
    for j in range(12):
        ref_s = reference.cell_collide(t[:, j].copy(), st.c, st.w, 1.3)
        ref_t = reference.cell_collide(
            t[:, j].copy(), st.c, st.w, 1.3, "trt", 0.9, st.inv
        )
        np.testing.assert_allclose(srt[:, j], ref_s, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(trt[:, j], ref_t, rtol=1e-12, atol=1e-15)


def test_trt_with_equal_rates_matches_srt():
    st = make_stencil("d2q9")
    rng = np.random.default_rng(6)
    t = 0.02 + rng.random((st.q, 20)) * 0.1
    srt = collide(t, CollisionParams(omega=1.4), st)
    trt = collide(t, CollisionParams(omega=1.4, model="trt", lambda_odd=1.4), st)
    np.testing.assert_allclose(trt, srt, rtol=1e-13, atol=1e-16)


def test_collide_does_not_mutate_input():
    st = make_stencil("d2q9")
    t = 0.1 + np.arange(18, dtype=float).reshape(9, 2) / 100.0
    keep = t.copy()
    collide(t, CollisionParams(omega=1.0), st)
    np.testing.assert_array_equal(t, keep)


# -- single-cell wrappers ----------------------------------------------------------


def test_scalar_wrappers_match_batched():
    st = make_stencil("d2q9")
    rng = np.random.default_rng(7)
    f = 0.05 + rng.random(9) * 0.1
    m = macroscopic(f, st)
    rho, u = moments(f.reshape(9, 1), st)
    assert m.rho == rho[0]
    np.testing.assert_array_equal(m.u, u[:, 0])
    np.testing.assert_array_equal(
        equilibrium(m, st), equilibrium_fields(rho, u, st)[:, 0]
    )
    p = CollisionParams(omega=1.1)
    np.testing.assert_array_equal(
        collide_srt(f, p, st), collide(f.reshape(9, 1), p, st)[:, 0]
    )
    pt = CollisionParams(omega=1.1, model="trt", lambda_odd=0.8)
    np.testing.assert_array_equal(
        collide_trt(f, pt, st), collide(f.reshape(9, 1), pt, st)[:, 0]
    )
    with pytest.raises(ConfigurationError):
        collide_trt(f, p, st)


# -- moving-wall term ---------------------------------------------------------------


def test_ubb_correction_value():
    # direction (1, 0) against wall speed 0.05 along +x:
    # 2 * w * rho_w * (c . u) / cs2 = 2 * (1/9) * 0.05 * 3
    st = make_stencil("d2q9")
    qi = [i for i in range(9) if tuple(st.c[i]) == (1, 0)][0]
    got = ubb_correction(st, qi, np.array([0.05, 0.0]))
    assert got == pytest.approx(2.0 * (1.0 / 9.0) * 0.05 * 3.0, rel=1e-15)
    # orthogonal wall motion contributes nothing
    assert ubb_correction(st, qi, np.array([0.0, 0.7])) == 0.0
    # opposite direction flips the sign
    np.testing.assert_allclose(
        ubb_correction(st, int(st.inv[qi]), np.array([0.05, 0.0])), -got, rtol=1e-15
    )


def test_ubb_correction_batched_shape():
    st = make_stencil("d3q19")
    uw = np.zeros((4, 3))
    uw[:, 0] = [0.1, -0.1, 0.0, 0.2]
    qi = [i for i in range(19) if tuple(st.c[i]) == (1, 0, 0)][0]
    out = ubb_correction(st, qi, uw)
    assert out.shape == (4,)
    np.testing.assert_allclose(out, 2.0 * st.w[qi] * uw[:, 0] * 3.0, rtol=1e-15)
