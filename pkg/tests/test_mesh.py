"""Sector mesh generation: invariants, pairing, sizing, text round trip."""

import numpy as np
import pytest

from mmtopo import mesh as msh
from mmtopo.errors import InvalidGeometry, IoFailure


def check_mesh(m, target=None):
    """Independent validity checker used as the construction oracle."""
    x = m.nodes[m.triangles, 0]
    y = m.nodes[m.triangles, 1]
    area2 = ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
             - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    assert np.all(area2 > 0.0), "triangles must be positively oriented"

    # node pairing: slave = rotation of master by pole_angle
    ca, sa = np.cos(m.pole_angle), np.sin(m.pole_angle)
    rot = np.array([[ca, -sa], [sa, ca]])
    assert m.master_edge.shape == m.slave_edge.shape
    rotated = m.nodes[m.master_edge] @ rot.T
    assert np.abs(rotated - m.nodes[m.slave_edge]).max() < 1e-12

    r_c = np.linalg.norm(m.centroids(), axis=1)
    design = m.element_region == msh.REGION_DESIGN
    assert np.all(r_c[design] < m.r_rotor)
    assert np.all(r_c[design] > m.r_shaft)
    assert np.all(r_c[~design] > m.r_rotor)
    assert np.all(r_c[~design] < m.r_outer)

    r_n = np.linalg.norm(m.nodes, axis=1)
    tol = 1e-12 * m.r_outer
    assert np.abs(r_n[m.inner_arc] - m.r_shaft).max() < tol
    assert np.abs(r_n[m.outer_arc] - m.r_outer).max() < tol
    theta = np.arctan2(m.nodes[:, 1], m.nodes[:, 0])
    assert np.abs(theta[m.master_edge]).max() < 1e-12
    assert np.abs(theta[m.slave_edge] - m.pole_angle).max() < 1e-12

    # every node belongs to some triangle, no duplicated coordinates
    assert set(m.triangles.ravel()) == set(range(m.n_nodes))
    rounded = np.round(m.nodes / m.r_outer, 12)
    assert len({tuple(p) for p in rounded}) == m.n_nodes

    if target is not None:
        assert abs(m.n_elements - target) <= 0.2 * target


@pytest.mark.parametrize("target", [50, 200, 2000, 9000])
def test_generated_mesh_is_valid(target):
    m = msh.generate_sector_mesh(target_element_count=target)
    check_mesh(m, target=target)


def test_default_mesh_size():
    m = msh.generate_sector_mesh()
    assert abs(m.n_elements - 2000) <= 400
    assert m.design_elements.size > 0
    assert m.design_elements.size < m.n_elements


def test_probe_nodes_sit_on_rotor_radius():
    m = msh.generate_sector_mesh(target_element_count=300)
    for probe, edge_theta in ((m.probe_master, 0.0),
                              (m.probe_slave, m.pole_angle)):
        p = m.nodes[probe]
        np.testing.assert_allclose(np.linalg.norm(p), m.r_rotor, atol=1e-14)
        np.testing.assert_allclose(np.arctan2(p[1], p[0]), edge_theta,
                                   atol=1e-14)


def test_rotor_interface_has_grid_line():
    m = msh.generate_sector_mesh(target_element_count=500)
    r = np.linalg.norm(m.nodes, axis=1)
    on_interface = np.abs(r - m.r_rotor) < 1e-14 * m.r_outer
    assert on_interface.sum() >= 2


def test_p1_coefficients_reproduce_gradients():
    m = msh.generate_sector_mesh(target_element_count=120)
    b, c, area = m.p1_coefficients()
    # faceted sector area is below the circular one by the chord error
    np.testing.assert_allclose(area.sum(),
                               0.5 * m.pole_angle
                               * (m.r_outer**2 - m.r_shaft**2),
                               rtol=1e-2)
    # a linear field u = 2x - 3y has constant gradient on every element
    u = 2.0 * m.nodes[:, 0] - 3.0 * m.nodes[:, 1]
    ue = u[m.triangles]
    gx = np.einsum("ei,ei->e", ue, b) / (2.0 * area)
    gy = np.einsum("ei,ei->e", ue, c) / (2.0 * area)
    np.testing.assert_allclose(gx, 2.0, atol=1e-9)
    np.testing.assert_allclose(gy, -3.0, atol=1e-9)


def test_invalid_geometry_rejected():
    with pytest.raises(InvalidGeometry):
        msh.generate_sector_mesh(r_shaft=0.08, r_rotor=0.08)
    with pytest.raises(InvalidGeometry):
        msh.generate_sector_mesh(r_shaft=-0.01)
    with pytest.raises(InvalidGeometry):
        msh.generate_sector_mesh(pole_angle=0.0)
    with pytest.raises(InvalidGeometry):
        msh.generate_sector_mesh(pole_angle=4.0)
    with pytest.raises(InvalidGeometry):
        msh.generate_sector_mesh(target_element_count=2)


def test_text_round_trip(tmp_path):
    m = msh.generate_sector_mesh(target_element_count=150)
    path = tmp_path / "mesh.txt"
    msh.write_mesh(m, path)
    back = msh.read_mesh(path)
    np.testing.assert_array_equal(back.nodes, m.nodes)
    np.testing.assert_array_equal(back.triangles, m.triangles)
    np.testing.assert_array_equal(back.element_region, m.element_region)
    np.testing.assert_array_equal(np.sort(back.inner_arc),
                                  np.sort(m.inner_arc))
    np.testing.assert_array_equal(np.sort(back.master_edge),
                                  np.sort(m.master_edge))
    np.testing.assert_array_equal(np.sort(back.slave_edge),
                                  np.sort(m.slave_edge))
    assert back.r_rotor == m.r_rotor
    assert back.pole_angle == m.pole_angle
    check_mesh(back)


def test_malformed_mesh_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a mesh\n")
    with pytest.raises(IoFailure):
        msh.read_mesh(path)
    with pytest.raises(IoFailure):
        msh.read_mesh(tmp_path / "missing.txt")
