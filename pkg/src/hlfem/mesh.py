"""1D meshes: strictly increasing node arrays, bisection refinement, and the
left/right element partition around the boundary-layer separator node."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mesh1D",
    "RegionPartition",
    "uniform_mesh",
    "bisect_elements",
    "partition_left_right",
]

_NODE_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class Mesh1D:
    """Partition of [a, b] into linear elements K_i = [x_{i-1}, x_i]."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if not np.all(np.diff(nodes) > 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def element_count(self) -> int:
        return self.nodes.size - 1

    @property
    def dof(self) -> int:
        """Degrees of freedom = number of interior nodes."""
        return self.nodes.size - 2

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def element(self, i: int) -> tuple[float, float]:
        if not 0 <= i < self.element_count:
            raise IndexError(f"element index {i} out of range")
        return float(self.nodes[i]), float(self.nodes[i + 1])


@dataclass(frozen=True)
class RegionPartition:
    """Element indices on either side of the separator node x_layer."""

    left_elements: np.ndarray
    right_elements: np.ndarray
    x_layer: float


def uniform_mesh(N: int, a: float = 0.0, b: float = 1.0) -> Mesh1D:
    """Uniform mesh with N elements (N+1 equispaced nodes) on [a, b]."""
    if N < 1:
        raise ValueError("element count must be at least 1")
    if not a < b:
        raise ValueError("domain requires a < b")
    return Mesh1D(np.linspace(a, b, N + 1))


def bisect_elements(mesh: Mesh1D, marked) -> Mesh1D:
    """Insert the midpoint of every marked element; other elements unchanged."""
    marked = sorted(set(int(i) for i in marked))
    if not marked:
        return mesh
    if marked[0] < 0 or marked[-1] >= mesh.element_count:
        raise IndexError("marked element index out of range")
    nodes = mesh.nodes
    mids = 0.5 * (nodes[marked] + nodes[np.asarray(marked) + 1])
    return Mesh1D(np.sort(np.concatenate([nodes, mids])))


def partition_left_right(mesh: Mesh1D, x_layer: float) -> RegionPartition:
    """Split elements at the separator node: Left holds every element with
    both endpoints <= x_layer, Right the rest.  x_layer must be a node."""
    nodes = mesh.nodes
    idx = int(np.argmin(np.abs(nodes - x_layer)))
    if abs(nodes[idx] - x_layer) > _NODE_MATCH_TOL:
        raise ValueError(f"x_layer={x_layer!r} does not coincide with a mesh node")
    n = mesh.element_count
    return RegionPartition(
        left_elements=np.arange(idx, dtype=int),
        right_elements=np.arange(idx, n, dtype=int),
        x_layer=float(nodes[idx]),
    )
