"""Multi-hop downstream traffic pressure and heterogeneous perimeter control."""

from .control import (
    ControlAction,
    LinearInflowPolicy,
    PIInflowPolicy,
    TwoStageController,
    nmp_redistribute,
    softmax_redistribute,
    surrogate_homogeneous,
    two_stage_controller,
)
from .demand import DemandProfile, TripList, build_profile, interval_weights, sample_trips
from .errors import (
    ConfigError,
    DanglingLinkError,
    DimensionMismatchError,
    EmptyGroupError,
    NoPathError,
    ParamError,
    PerimeterPressureError,
    RowSumError,
    UnknownLinkError,
)
from .grid import GridNetwork, Movement, build_grid_network
from .network_graph import (
    OMEGA,
    ExtendedGraph,
    Link,
    TransitionMatrix,
    build_extended_graph,
    downstream_set,
    graph_from_config,
    graph_to_config,
    hop_distances,
    load_network_config,
    save_network_config,
    toy_corridor_network,
    transition_matrix,
)
from .perturbation import PerturbationSpec, perturb_turning_ratios
from .pressure import (
    PerimeterPressureVector,
    PressureVector,
    QueueDensityVector,
    accumulative_importance,
    multi_hop_pressure,
    multi_hop_pressure_profile,
    multi_hop_pressure_unrolled,
    perimeter_pressures,
    scalar_pressure_oracle,
)
from .signals import SignalPlan, default_two_ring_plan
from .simulator import Metrics, SimState, path_assignment, run_scenario, step

__version__ = "0.1.0"
