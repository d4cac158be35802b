"""Covering numbers of graph spaces under forest distances, and the generalization bounds built on them."""

from .graph_core import GraphCollection, LabeledGraph, make_graph
from .metrics import MetricSpec, distance_matrix, forest_distance, mean_forest_distance

__all__ = ["GraphCollection", "LabeledGraph", "MetricSpec", "distance_matrix", "forest_distance",
           "make_graph", "mean_forest_distance"]
__version__ = "0.1.0"
