"""Fault-tolerant distance preservers in a simulated CONGEST network."""
from .graph_core import FaultSet, Graph, Path, PreserverSubgraph, ShortestPathTree, bfs_consistent, replacement_path

__all__ = ["FaultSet", "Graph", "Path", "PreserverSubgraph", "ShortestPathTree", "bfs_consistent", "replacement_path"]
