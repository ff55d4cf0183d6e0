import math
from fractions import Fraction

import numpy as np
import pytest

from slbm.errors import ConfigurationError
from slbm.stencil import CS2, STENCIL_NAMES, make_stencil

ALL = ["d2q9", "d3q19", "d3q27"]


def test_supported_names():
    assert STENCIL_NAMES == ("d2q9", "d3q19", "d3q27")
    with pytest.raises(ConfigurationError):
        make_stencil("d3q15")


@pytest.mark.parametrize("name,dim,q", [("d2q9", 2, 9), ("d3q19", 3, 19), ("d3q27", 3, 27)])
def test_shape(name, dim, q):
    st = make_stencil(name)
    assert (st.dim, st.q) == (dim, q)
    assert st.c.shape == (q, dim)
    assert st.w.shape == (q,)
    assert st.inv.shape == (q,)
    assert len(st.w_exact) == q


@pytest.mark.parametrize("name", ALL)
def test_case_insensitive(name):
    assert make_stencil(name.upper()).name == name


@pytest.mark.parametrize("name", ALL)
def test_directions_unique_and_bounded(name):
    st = make_stencil(name)
    assert len({tuple(v) for v in st.c}) == st.q
    assert np.abs(st.c).max() == 1


@pytest.mark.parametrize("name", ALL)
def test_ordering(name):
    # center first, then grouped by nonzero count, lexicographic inside
    st = make_stencil(name)
    assert tuple(st.c[0]) == (0,) * st.dim
    keys = [(int(np.count_nonzero(v)), tuple(v)) for v in st.c]
    assert keys == sorted(keys)


@pytest.mark.parametrize("name", ALL)
def test_opposites(name):
    st = make_stencil(name)
    for i in range(st.q):
        assert tuple(st.c[st.inv[i]]) == tuple(-st.c[i])
        assert st.opposite(st.opposite(i)) == i
        assert st.w_exact[st.inv[i]] == st.w_exact[i]
    assert st.inv[0] == 0


@pytest.mark.parametrize("name", ALL)
def test_quadrature_moments_exact(name):
    # zeroth through fourth velocity moments of the weights, in exact
    # rational arithmetic: sum w = 1, sum w c = 0, sum w c_a c_b =
    # cs2 delta_ab, odd moments vanish, fourth moment isotropy
    st = make_stencil(name)
    cs2 = Fraction(1, 3)
    w = st.w_exact
    c = st.c
    assert sum(w) == 1
    for a in range(st.dim):
        assert sum(w[i] * int(c[i, a]) for i in range(st.q)) == 0
        for b in range(st.dim):
            second = sum(w[i] * int(c[i, a]) * int(c[i, b]) for i in range(st.q))
            assert second == (cs2 if a == b else 0)
            for g in range(st.dim):
                third = sum(
                    w[i] * int(c[i, a]) * int(c[i, b]) * int(c[i, g])
                    for i in range(st.q)
                )
                assert third == 0
    for a in range(st.dim):
        fourth_aaaa = sum(w[i] * int(c[i, a]) ** 4 for i in range(st.q))
        assert fourth_aaaa == 3 * cs2**2
        for b in range(st.dim):
            if b == a:
                continue
            fourth_aabb = sum(
                w[i] * int(c[i, a]) ** 2 * int(c[i, b]) ** 2 for i in range(st.q)
            )
            assert fourth_aabb == cs2**2


def test_d2q9_weights():
    st = make_stencil("d2q9")
    by_family = {int(np.count_nonzero(v)): wf for v, wf in zip(st.c, st.w_exact)}
    assert by_family == {0: Fraction(4, 9), 1: Fraction(1, 9), 2: Fraction(1, 36)}


def test_d3q19_weights():
    st = make_stencil("d3q19")
    fams = {0: Fraction(1, 3), 1: Fraction(1, 18), 2: Fraction(1, 36)}
    for v, wf in zip(st.c, st.w_exact):
        assert wf == fams[int(np.count_nonzero(v))]
    assert sum(1 for v in st.c if np.count_nonzero(v) == 2) == 12


def test_d3q27_weights():
    st = make_stencil("d3q27")
    fams = {
        0: Fraction(8, 27),
        1: Fraction(2, 27),
        2: Fraction(1, 54),
        3: Fraction(1, 216),
    }
    for v, wf in zip(st.c, st.w_exact):
        assert wf == fams[int(np.count_nonzero(v))]


@pytest.mark.parametrize("name", ALL)
def test_float_weights_match_exact(name):
    st = make_stencil(name)
    for wf, w in zip(st.w_exact, st.w):
        assert w == float(wf)


def test_cs2():
    assert math.isclose(CS2, 1.0 / 3.0)
    assert make_stencil("d2q9").cs2 == CS2


@pytest.mark.parametrize("name", ALL)
def test_arrays_readonly(name):
    st = make_stencil(name)
    for arr in (st.c, st.w, st.inv):
        with pytest.raises(ValueError):
            arr[0] = 0
