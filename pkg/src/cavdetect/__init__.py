"""Cavity detection on protein structures from Voronoi alpha spheres and DBSCAN."""

from .alpha import AlphaSphere, RadiusBand, filter_alpha_spheres
from .clustering import ClusterLabeling, DbscanParams, dbscan, merge_small_clusters, silhouette_score
from .geometry import VoronoiVertex, circumsphere, delaunay, voronoi_vertices
from .pdb_io import Atom, Ligand, Structure, parse_pdb, read_pdb, write_info_txt, write_pocket_pdb
from .pipeline import PipelineConfig, run_batch, run_pipeline
from .pockets import Pocket, Shape, SiteCriteria, assemble_pockets, classify_shape, classify_sites

__version__ = "0.1.0"

__all__ = [
    "AlphaSphere", "RadiusBand", "filter_alpha_spheres",
    "ClusterLabeling", "DbscanParams", "dbscan", "merge_small_clusters", "silhouette_score",
    "VoronoiVertex", "circumsphere", "delaunay", "voronoi_vertices",
    "Atom", "Ligand", "Structure", "parse_pdb", "read_pdb", "write_info_txt", "write_pocket_pdb",
    "PipelineConfig", "run_batch", "run_pipeline",
    "Pocket", "Shape", "SiteCriteria", "assemble_pockets", "classify_shape", "classify_sites",
]
