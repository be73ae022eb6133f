"""
Computational graph over the periodic 1D grid.

Every node receives edges from its k nearest neighbours on each side, with
wraparound at the domain boundary. Relative positions use the minimal-image
convention, so |x_i - x_j| <= L/2.
"""
import logging
from dataclasses import dataclass

import numpy as np

from app.errors import ConfigurationError
from app.solvers.trajectory import uniform_space

logger = logging.getLogger(__name__)

DEFAULT_NEIGHBORS = 3


@dataclass(frozen=True)
class GraphTopology:
    """
    Directed edge list j -> i over ``n_nodes`` nodes.

    ``edge_index[0]`` holds sources j and ``edge_index[1]`` destinations i.
    """
    x: np.ndarray
    edge_index: np.ndarray
    L: float

    @property
    def n_nodes(self) -> int:
        return self.x.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_index.shape[1]

    @property
    def src(self) -> np.ndarray:
        return self.edge_index[0]

    @property
    def dst(self) -> np.ndarray:
        return self.edge_index[1]

    def in_neighbors(self, i: int) -> set[int]:
        return set(self.src[self.dst == i].tolist())

    def relative_positions(self) -> np.ndarray:
        """x_i - x_j per edge, wrapped to the minimal image."""
        return minimal_image(self.x[self.dst] - self.x[self.src], self.L)

    def rolled(self, shift: int) -> "GraphTopology":
        """
        Relabel node i as (i + shift) mod n, carrying coordinates along.

        Node features rolled by ``shift`` on the node axis line up with the
        returned topology.
        """
        n = self.n_nodes
        return GraphTopology(
            x=np.roll(self.x, shift),
            edge_index=(self.edge_index + shift) % n,
            L=self.L,
        )


def minimal_image(dx: np.ndarray, L: float) -> np.ndarray:
    """Map displacements into [-L/2, L/2]."""
    return dx - L * np.round(dx / L)


def build_graph(n_x: int, L: float, k: int = DEFAULT_NEIGHBORS) -> GraphTopology:
    """
    Periodic k-nearest-neighbours-per-side graph.

    Raises:
        ConfigurationError: n_x <= 2k (neighbours would repeat)
    """
    if n_x <= 2 * k:
        raise ConfigurationError(
            f"graph needs n_x > 2k, got n_x={n_x}, k={k}"
        )
    offsets = np.concatenate([np.arange(-k, 0), np.arange(1, k + 1)])
    dst = np.repeat(np.arange(n_x), offsets.size)
    src = (dst + np.tile(offsets, n_x)) % n_x
    graph = GraphTopology(
        x=uniform_space(n_x, L),
        edge_index=np.stack([src, dst]).astype(np.int64),
        L=float(L),
    )
    logger.debug(f"Built periodic graph: {n_x} nodes, {graph.n_edges} edges")
    return graph
