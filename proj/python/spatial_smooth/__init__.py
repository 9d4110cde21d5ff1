"""Connectivity-based spatial smoothing for areal disease data."""

from ._core import (
    ConnectivityCoords,
    PosteriorSamples,
    Region,
    SimDataset,
    SmoothBasis,
    SpatialSmoothError,
    auroc,
    brier,
    classical_mds,
    double_center,
    export_field_map,
    fit_bym2,
    fit_spline,
    gravity_flows,
    icar_scaling,
    load_region_csv,
    mae,
    make_grid_region,
    make_smooth,
    movement_coords,
    pseudo_inverse,
    rhat_ess,
    run_experiment,
    scaled_centroids,
    simulate,
    sm_surface,
    validate_config,
    variance_decomposition,
    waic,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
