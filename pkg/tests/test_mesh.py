import numpy as np
import pytest

from hlfem.mesh import Mesh1D, bisect_elements, partition_left_right, uniform_mesh


def test_uniform_nodes():
    m = uniform_mesh(15)
    assert m.nodes == pytest.approx([i / 15 for i in range(16)], abs=1e-15)
    assert m.element_count == 15
    assert m.dof == 14


def test_uniform_trivial_sizes():
    assert uniform_mesh(1, 0.0, 2.0).nodes.tolist() == [0.0, 2.0]
    assert uniform_mesh(2).nodes.tolist() == [0.0, 0.5, 1.0]


def test_uniform_rejects_bad_input():
    with pytest.raises(ValueError):
        uniform_mesh(0)
    with pytest.raises(ValueError):
        uniform_mesh(4, 1.0, 1.0)


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh1D(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        Mesh1D(np.array([0.0]))


def test_bisect_single_element():
    m = Mesh1D(np.array([0.0, 0.5, 1.0]))
    assert bisect_elements(m, [0]).nodes.tolist() == [0.0, 0.25, 0.5, 1.0]


def test_bisect_all_gives_uniform():
    m = bisect_elements(uniform_mesh(2), [0, 1])
    assert m.nodes == pytest.approx(uniform_mesh(4).nodes)


def test_bisect_empty_is_identity():
    m = Mesh1D(np.array([0.0, 0.5, 1.0]))
    assert bisect_elements(m, []) is m


def test_bisect_rejects_bad_index():
    with pytest.raises(IndexError):
        bisect_elements(uniform_mesh(3), [3])


def test_bisection_keeps_nodes_and_grows_dof():
    rng = np.random.default_rng(3)
    m = uniform_mesh(9, 0.0, 2.0)
    for _ in range(20):
        k = int(rng.integers(1, m.element_count + 1))
        marked = rng.choice(m.element_count, size=k, replace=False)
        refined = bisect_elements(m, marked)
        assert set(m.nodes).issubset(set(refined.nodes))
        assert refined.dof == m.dof + len(set(marked.tolist()))
        m = refined


def test_partition_examples():
    m = uniform_mesh(15)
    p = partition_left_right(m, m.nodes[-2])
    assert len(p.left_elements) == 14
    assert len(p.right_elements) == 1

    p = partition_left_right(m, m.b)
    assert len(p.left_elements) == 15 and len(p.right_elements) == 0

    p = partition_left_right(m, m.a)
    assert len(p.left_elements) == 0 and len(p.right_elements) == 15


def test_partition_covers_without_overlap():
    m = uniform_mesh(12)
    p = partition_left_right(m, m.nodes[5])
    both = np.concatenate([p.left_elements, p.right_elements])
    assert sorted(both.tolist()) == list(range(12))
    assert not set(p.left_elements.tolist()) & set(p.right_elements.tolist())


def test_partition_requires_node():
    with pytest.raises(ValueError):
        partition_left_right(uniform_mesh(15), 0.3)


def test_layer_node_survives_refinement():
    m = uniform_mesh(15)
    x_layer = float(m.nodes[-2])
    rng = np.random.default_rng(5)
    for _ in range(10):
        marked = rng.choice(m.element_count, size=3, replace=False)
        m = bisect_elements(m, marked)
        partition_left_right(m, x_layer)  # still a node, no exception
