import numpy as np
import pytest

from slbm.errors import ConfigurationError
from slbm.flags import (
    EXCHANGE,
    FLUID,
    NOSLIP,
    UBB,
    FaceKind,
    FaceSpec,
    cell_coord,
    cell_linear_index,
    frame_mask,
    make_flags,
    rev_shape,
    ring_offset,
)

W = FaceSpec(FaceKind.WALL)
P = FaceSpec(FaceKind.PERIODIC)


def test_rev_shape_and_linear_index():
    assert rev_shape((4, 3)) == (3, 4)
    assert rev_shape((4, 3, 2)) == (2, 3, 4)
    # x varies fastest in the scan order
    assert cell_linear_index((0, 0, 0), (4, 3, 2)) == 0
    assert cell_linear_index((1, 0, 0), (4, 3, 2)) == 1
    assert cell_linear_index((0, 1, 0), (4, 3, 2)) == 4
    assert cell_linear_index((0, 0, 1), (4, 3, 2)) == 12
    for lin in range(24):
        assert cell_linear_index(cell_coord(lin, (4, 3, 2)), (4, 3, 2)) == lin


def test_ring_offset():
    dims = (4, 3)
    assert ring_offset((0, 0), dims) == (0, 0)
    assert ring_offset((-1, 0), dims) == (-1, 0)
    assert ring_offset((4, 2), dims) == (1, 0)
    assert ring_offset((2, 3), dims) == (0, 1)
    assert ring_offset((-1, -1), dims) == (-1, -1)


def test_make_flags_shapes():
    f = make_flags((6, 4), [(P, P), (W, W)])
    assert f.dims == (6, 4)
    assert f.tags.shape == (6, 8)
    assert f.ubb_u.shape == (6, 8, 2)
    assert f.periodic == (True, False)
    assert f.fluid_count() == 24
    assert f.cell_count() == 24
    assert f.porosity() == 1.0


def test_walls_paint_ring():
    f = make_flags((5, 3), [(W, W), (W, W)])
    t = f.tags
    assert (t[0, :] == NOSLIP).all() and (t[-1, :] == NOSLIP).all()
    assert (t[:, 0] == NOSLIP).all() and (t[:, -1] == NOSLIP).all()
    assert (t[1:-1, 1:-1] == FLUID).all()


def test_periodic_ring_wraps_content():
    solid = np.zeros((3, 5), dtype=bool)
    solid[1, 0] = True  # cell (0, 1) solid
    f = make_flags((5, 3), [(P, P), (W, W)], solid=solid)
    # x ring carries the wrapped image of the far column
    assert f.tag_at((-1, 1)) == f.tag_at((4, 1))
    assert f.tag_at((5, 1)) == f.tag_at((0, 1)) == NOSLIP
    assert f.tag_at((0, -1)) == NOSLIP  # wall below


def test_moving_lid_tags_and_velocity():
    lid = FaceSpec(FaceKind.WALL, velocity=(0.05, 0.0))
    f = make_flags((4, 3), [(P, P), (W, lid)], solid=None)
    assert f.tag_at((1, 3)) == UBB
    np.testing.assert_array_equal(f.ubb_at((1, 3)), [0.05, 0.0])
    assert f.tag_at((1, -1)) == NOSLIP
    np.testing.assert_array_equal(f.ubb_at((1, -1)), [0.0, 0.0])


def test_zero_velocity_wall_is_noslip():
    still = FaceSpec(FaceKind.WALL, velocity=(0.0, 0.0))
    f = make_flags((3, 3), [(W, W), (W, still)])
    assert f.tag_at((1, 3)) == NOSLIP


def test_corner_ownership():
    # axes pad in array order (y before x in 2-d), so the x faces claim
    # the corners; with periodic x the corner carries the wrapped image
    # of the y-face ring, keeping walls consistent around the loop
    lid = FaceSpec(FaceKind.WALL, velocity=(0.1, 0.0))
    f = make_flags((4, 3), [(P, P), (W, lid)])
    assert f.tag_at((-1, 3)) == UBB
    assert f.tag_at((4, 3)) == UBB
    assert f.tag_at((-1, -1)) == NOSLIP
    # fully walled: corner belongs to the later-padded x face
    g = make_flags((4, 3), [(W, FaceSpec(FaceKind.WALL, velocity=(0.0, 0.2))), (W, W)])
    assert g.tag_at((4, 1)) == UBB
    assert g.tag_at((4, -1)) == UBB
    assert g.tag_at((4, 3)) == UBB


def test_solid_mask_applied():
    solid = np.zeros((3, 4), dtype=bool)
    solid[0, 2] = True
    f = make_flags((4, 3), [(W, W), (W, W)], solid=solid)
    assert f.tag_at((2, 0)) == NOSLIP
    assert f.fluid_count() == 11
    assert f.porosity() == pytest.approx(11 / 12)


def test_3d_flags():
    f = make_flags((4, 3, 2), [(P, P), (W, W), (W, W)])
    assert f.tags.shape == (4, 5, 6)
    assert f.periodic == (True, False, False)
    assert f.tag_at((0, -1, 0)) == NOSLIP
    assert f.tag_at((-1, 0, 0)) == FLUID


def test_validation_errors():
    with pytest.raises(ConfigurationError):
        make_flags((4,), [(W, W)])
    with pytest.raises(ConfigurationError):
        make_flags((4, 0), [(W, W), (W, W)])
    with pytest.raises(ConfigurationError):
        make_flags((4, 4), [(W, W)])
    with pytest.raises(ConfigurationError):
        make_flags((4, 4), [(P, W), (W, W)])  # one-sided periodic
    with pytest.raises(ConfigurationError):
        make_flags((4, 4), [(FaceSpec(FaceKind.EXCHANGE), W), (W, W)])
    with pytest.raises(ConfigurationError):
        make_flags(
            (4, 4), [(FaceSpec(FaceKind.PERIODIC, velocity=(0.1, 0.0)), P), (W, W)]
        )
    with pytest.raises(ConfigurationError):
        make_flags(
            (4, 4), [(FaceSpec(FaceKind.WALL, velocity=(0.1,)), W), (W, W)]
        )
    with pytest.raises(ConfigurationError):
        make_flags((4, 4), [(W, W), (W, W)], solid=np.zeros((3, 3), dtype=bool))


def test_ubb_velocity_zeroed_away_from_ubb():
    lid = FaceSpec(FaceKind.WALL, velocity=(0.3, 0.0))
    f = make_flags((4, 3), [(W, lid), (W, W)])
    assert f.ubb_u[f.tags != UBB].max() == 0.0
    assert f.ubb_u[f.tags == UBB][:, 0].min() == 0.3


def test_frame_mask_scalar_width():
    m = frame_mask((5, 4), 1)
    assert m.shape == (4, 5)
    inner = m[1:-1, 1:-1]
    assert not inner.any()
    assert m.sum() == 5 * 4 - 3 * 2


def test_frame_mask_per_axis_widths():
    m = frame_mask((6, 4), (2, 1))
    # width 2 along x, 1 along y
    assert m[1, 1] and m[1, 4]  # x frame, two deep
    assert not m[1, 2]
    assert m[0, 2] and m[3, 2]  # y frame, one deep


def test_frame_mask_clamps_and_validates():
    assert frame_mask((2, 2), 5).all()
    with pytest.raises(ConfigurationError):
        frame_mask((4, 4), 0)
    with pytest.raises(ConfigurationError):
        frame_mask((4, 4), (1, 1, 1))


def test_exchange_tag_value_reserved():
    # partitioning relies on the exchange tag being distinct
    assert len({FLUID, NOSLIP, UBB, EXCHANGE}) == 4
