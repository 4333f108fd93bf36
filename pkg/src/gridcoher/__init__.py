"""Frequency-coherence analysis of droop- and PI-controlled generator networks.

The package models a connected network of synchronous generators under
four control layers (droop, CAPI, DAPI, DePI), evaluates the expected
transient incoherence caused by random step loads by three mutually
checking methods, and tunes the DAPI communication gain.
"""

__version__ = "0.1.0"

from .controllers import (
    Capi,
    ClosedLoopSystem,
    Dapi,
    Depi,
    Droop,
    GeneratorParams,
    StateLayout,
    assemble,
    controller_from_dict,
    modal_block,
    params_from_dict,
    unobservable_marginal_modes,
)
from .errors import (
    AssumptionError,
    ConfigError,
    DisconnectedGraphError,
    GraphError,
    GridcoherError,
    ObservableMarginalModeError,
    ParameterError,
    UnstableSystemError,
)
from .netmodel import (
    LaplacianSpectrum,
    NetworkGraph,
    build_laplacian,
    complete_graph_spectrum,
    effective_resistance_sum,
    load_edge_list,
    make_graph,
    save_edge_list,
    save_spectrum_csv,
    spectrum,
)
from .perf import (
    DisturbanceSample,
    NormReport,
    TrajectoryRecord,
    draw_load,
    report_to_json,
    scaling_bound_dapi,
    simulate_linear,
    simulate_nonlinear,
    sync_norm_closed_form,
    sync_norm_lyapunov,
    sync_norm_monte_carlo,
    trajectory_to_csv,
    trapezoid_energy,
)
from .tuning import (
    GammaOptimum,
    f_mode,
    g_mode,
    gamma_optimum_to_json,
    optimal_gamma_complete,
    optimal_gamma_general,
)

__all__ = [
    "AssumptionError",
    "Capi",
    "ClosedLoopSystem",
    "ConfigError",
    "Dapi",
    "Depi",
    "DisconnectedGraphError",
    "DisturbanceSample",
    "Droop",
    "GammaOptimum",
    "GeneratorParams",
    "GraphError",
    "GridcoherError",
    "LaplacianSpectrum",
    "NetworkGraph",
    "NormReport",
    "ObservableMarginalModeError",
    "ParameterError",
    "StateLayout",
    "TrajectoryRecord",
    "UnstableSystemError",
    "assemble",
    "build_laplacian",
    "complete_graph_spectrum",
    "controller_from_dict",
    "draw_load",
    "effective_resistance_sum",
    "f_mode",
    "g_mode",
    "gamma_optimum_to_json",
    "load_edge_list",
    "make_graph",
    "modal_block",
    "optimal_gamma_complete",
    "optimal_gamma_general",
    "params_from_dict",
    "report_to_json",
    "save_edge_list",
    "save_spectrum_csv",
    "scaling_bound_dapi",
    "simulate_linear",
    "simulate_nonlinear",
    "spectrum",
    "sync_norm_closed_form",
    "sync_norm_lyapunov",
    "sync_norm_monte_carlo",
    "trajectory_to_csv",
    "trapezoid_energy",
    "unobservable_marginal_modes",
]
