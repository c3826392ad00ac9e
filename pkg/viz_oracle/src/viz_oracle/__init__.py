"""Plotting and independent dense cross-checks for ttkd result files."""

from .crosscheck import (
    amuse_eigenvalues,
    cca_eigenvalues,
    dense_transform,
    load_basis,
    oracle_crosscheck,
    read_trajectory,
)
from .plots import (
    cluster_count,
    component_centroids,
    extract_isosurface,
    mesh_components,
    plot_isosurfaces,
    plot_timescales,
)
from .results import ResultsBundle, SchemaError, load_bundle, load_results

__version__ = "0.1.0"
