import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covplan.world_model import (DIR_DELTAS, DIR_LENGTHS, Irm, RiskClass,
                                 new_irm, opposite_dir)

W = 1.0


def test_new_irm_blank_slate():
    irm = new_irm(3, 3, 1.0, (0.0, 0.0))
    assert irm.risk.shape == (3, 3)
    assert (irm.risk == int(RiskClass.UNKNOWN)).all()
    assert (irm.coverage == 0.0).all()
    assert (irm.edge_risk == 0.0).all()


def test_new_irm_span():
    irm = new_irm(50, 50, 0.5, (-12.5, -12.5))
    assert irm.width * irm.cell_width == 25.0
    assert irm.height * irm.cell_width == 25.0
    # world origin falls on the central cell
    assert irm.node_at((0.0, 0.0)) == (25, 25)


@pytest.mark.parametrize("dims", [(2, 2), (1, 5), (3, 2), (0, 0)])
def test_new_irm_too_small(dims):
    with pytest.raises(ValueError):
        new_irm(dims[0], dims[1], 1.0, (0.0, 0.0))


def test_new_irm_bad_cell_width():
    with pytest.raises(ValueError):
        new_irm(5, 5, 0.0, (0.0, 0.0))
    with pytest.raises(ValueError):
        new_irm(5, 5, -1.0, (0.0, 0.0))


def test_risk_class_probabilities():
    assert RiskClass.FREE.probability == 0.0
    assert RiskClass.UNKNOWN.probability == 0.5
    assert RiskClass.OCCUPIED.probability == 1.0
    assert len(RiskClass) == 3


def test_neighbors_center():
    irm = new_irm(3, 3, 1.0, (0.0, 0.0))
    nbrs = irm.neighbors((1, 1))
    assert len(nbrs) == 8
    dists = sorted(e.distance for _, e in nbrs)
    assert dists[:4] == [1.0] * 4
    assert all(abs(d - math.sqrt(2)) < 1e-12 for d in dists[4:])


def test_neighbors_corner_and_edge():
    irm = new_irm(3, 3, 1.0, (0.0, 0.0))
    assert len(irm.neighbors((0, 0))) == 3
    assert len(irm.neighbors((1, 0))) == 5


def test_neighbors_out_of_bounds():
    irm = new_irm(3, 3, 1.0, (0.0, 0.0))
    with pytest.raises(IndexError):
        irm.neighbors((3, 0))


def test_set_risk_roundtrip():
    irm = new_irm(4, 4, 1.0, (0.0, 0.0))
    irm.set_risk((2, 1), RiskClass.OCCUPIED)
    assert irm.risk_class((2, 1)) == RiskClass.OCCUPIED
    assert irm.risk_class((2, 1)).probability == 1.0


def test_set_edge_risk_roundtrip_and_symmetry():
    irm = new_irm(4, 4, 1.0, (0.0, 0.0))
    irm.set_edge_risk((1, 1), (2, 1), 0.3)
    nbrs = dict(irm.neighbors((1, 1)))
    assert nbrs[(2, 1)].risk == 0.3
    rev = dict(irm.neighbors((2, 1)))
    assert rev[(1, 1)].risk == 0.3


def test_set_edge_risk_rejects_negative():
    irm = new_irm(4, 4, 1.0, (0.0, 0.0))
    with pytest.raises(ValueError):
        irm.set_edge_risk((1, 1), (2, 1), -0.1)


def test_set_edge_risk_rejects_non_adjacent():
    irm = new_irm(4, 4, 1.0, (0.0, 0.0))
    with pytest.raises(ValueError):
        irm.set_edge_risk((0, 0), (2, 0), 0.1)
    with pytest.raises(ValueError):
        irm.set_edge_risk((0, 0), (0, 0), 0.1)


def _marked(width=3, height=3):
    """Small lattice with distinct per-node markers in risk and coverage."""
    irm = new_irm(width, height, 1.0, (0.0, 0.0))
    for y in range(height):
        for x in range(width):
            irm.risk[y, x] = (x + y) % 3
            irm.coverage[y, x] = (y * width + x) / (width * height)
    return irm


def test_recenter_identity():
    irm = _marked()
    out = irm.recenter(irm.cell_center(irm.center_node))
    assert (out.risk == irm.risk).all()
    assert (out.coverage == irm.coverage).all()
    assert out.origin == irm.origin


def test_recenter_one_cell_east():
    irm = _marked()
    center = irm.cell_center(irm.center_node)
    out = irm.recenter((center[0] + 1.0, center[1]))
    # interior shifts west; new easternmost column reinitialized
    assert (out.risk[:, :2] == irm.risk[:, 1:]).all()
    assert (out.coverage[:, :2] == irm.coverage[:, 1:]).all()
    assert (out.risk[:, 2] == int(RiskClass.UNKNOWN)).all()
    assert (out.coverage[:, 2] == 0.0).all()


def test_recenter_full_shift_resets():
    irm = _marked()
    center = irm.cell_center(irm.center_node)
    out = irm.recenter((center[0] + 10.0, center[1]))
    assert (out.risk == int(RiskClass.UNKNOWN)).all()
    assert (out.coverage == 0.0).all()


@given(k=st.integers(min_value=-3, max_value=3))
@settings(max_examples=20)
def test_recenter_there_and_back(k):
    irm = _marked(9, 9)
    center = irm.cell_center(irm.center_node)
    fwd = irm.recenter((center[0] + k, center[1] - k))
    back = fwd.recenter(center)
    lo, hi = abs(k), 9 - abs(k)
    assert (back.risk[lo:hi, lo:hi] == irm.risk[lo:hi, lo:hi]).all()
    assert (back.coverage[lo:hi, lo:hi] == irm.coverage[lo:hi, lo:hi]).all()


@given(dx=st.floats(-20, 20), dy=st.floats(-20, 20))
@settings(max_examples=30)
def test_recenter_constant_size(dx, dy):
    irm = _marked(5, 5)
    out = irm.recenter((dx, dy))
    assert out.risk.shape == irm.risk.shape
    assert out.risk.size == 25


def test_neighbors_symmetric_with_risks():
    rng = np.random.default_rng(0)
    irm = new_irm(5, 5, 0.5, (0.0, 0.0))
    for y in range(5):
        for x in range(5):
            for d, (dx, dy) in enumerate(DIR_DELTAS):
                if irm.in_bounds((x + dx, y + dy)):
                    irm.set_edge_risk((x, y), (x + dx, y + dy),
                                      float(rng.random()))
    for y in range(5):
        for x in range(5):
            for nbr, e in irm.neighbors((x, y)):
                back = dict(irm.neighbors(nbr))
                assert back[(x, y)].distance == e.distance
                assert back[(x, y)].risk == e.risk


def test_opposite_dir():
    for d in range(8):
        dx, dy = DIR_DELTAS[d]
        ox, oy = DIR_DELTAS[opposite_dir(d)]
        assert (ox, oy) == (-dx, -dy)


def test_node_at_and_cell_center():
    irm = new_irm(4, 4, 0.5, (1.0, 2.0))
    assert irm.node_at((1.0, 2.0)) == (0, 0)
    assert irm.node_at((2.9, 3.9)) == (3, 3)
    assert irm.cell_center((0, 0)) == (1.25, 2.25)


def test_ppm_dump(tmp_path):
    irm = new_irm(4, 3, 1.0, (0.0, 0.0))
    irm.set_risk((0, 0), RiskClass.OCCUPIED)
    irm.set_risk((1, 0), RiskClass.FREE)
    irm.coverage[0, 1] = 1.0
    path = tmp_path / "irm.ppm"
    irm.to_ppm(path)
    data = path.read_bytes()
    assert data.startswith(b"P6\n4 3\n255\n")
    assert len(data) == len(b"P6\n4 3\n255\n") + 4 * 3 * 3


def test_copy_is_independent():
    irm = _marked()
    dup = irm.copy()
    dup.risk[0, 0] = 99
    dup.coverage[0, 0] = 0.123
    assert irm.risk[0, 0] != 99
    assert irm.coverage[0, 0] != 0.123
