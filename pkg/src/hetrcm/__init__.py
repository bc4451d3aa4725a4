"""Simulation and exact degree laws for the heterogeneous Poisson random-connection model."""
from .analytic import (
    AnalyticReport,
    Regime,
    analytic_report,
    c1_constant,
    classify_regime,
    degree_pmf,
    integral_closed_form,
    mean_degree,
    tail_asymptotic,
    unit_ball_volume,
)
from .cloud import PointCloud, distance, sample_cloud, sample_palm_cloud, sample_pareto
from .graph import (
    ClusterStats,
    Graph,
    build_graph,
    build_graph_fast,
    components,
    connection_probability,
    degree_of,
)
from .params import Boundary, BoxDomain, ModelParams

__version__ = "0.1.0"

__all__ = [
    "AnalyticReport", "Boundary", "BoxDomain", "ClusterStats", "Graph", "ModelParams",
    "PointCloud", "Regime", "analytic_report", "build_graph", "build_graph_fast",
    "c1_constant", "classify_regime", "components", "connection_probability", "degree_of",
    "degree_pmf", "distance", "integral_closed_form", "mean_degree", "sample_cloud",
    "sample_palm_cloud", "sample_pareto", "tail_asymptotic", "unit_ball_volume",
]
