"""Heat-bath sampling of the surface measure and batch-means estimators."""

from .chain import (
    ChainConfig,
    SampleStream,
    SurfaceState,
    chain_generators,
    default_burn_in,
    load_checkpoint,
    read_stream_binary,
    read_stream_csv,
    run_chains,
    save_checkpoint,
)
from .conditional import ConditionalDensity, conditional_density, sample_conditional
from .estimators import (
    ChessboardReport,
    EstimateWithCI,
    RatioTable,
    batch_means,
    chessboard_check,
    good_edge_component,
    good_edge_conductance,
    good_edges,
    gradient_event_probability,
    in_union,
    integrated_autocorr_time,
    key_lemma_frequency,
    mean_estimate,
    tail_estimate,
    variance_estimate,
)
