"""Critical bond-percolation laboratory.

Simulates bond percolation on high-dimensional tori and related finite
graphs, locates the finite-graph critical point from chi(p) = lambda V^(1/3),
and measures the mean-field scaling exponents of cluster volume, diameter,
and random-walk mixing time.
"""

from .graphs import Family, GraphSpec, InvalidSpec, VertexOutOfRange, degree, edge_count, edge_list, neighbors, vertex_coords, vertex_index
from .percolate import BondConfig, ClusterLabeling, ClusterSubgraph, InvalidProbability, RankOutOfRange, cluster, extract_cluster, sample_bonds, z_geq
from .oracle import ExactReport, TooManyEdges, enumerate_exact

__version__ = "0.1.0"
