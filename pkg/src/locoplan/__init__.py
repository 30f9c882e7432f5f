"""Multi-contact planning and online trajectory refinement for planar robots.

Offline: search a stance sequence (which end effector touches what,
where), then plan a whole-body motion for every stance transition.
Online: discretize the motion, hang error terms on a sparse trajectory
graph, and re-optimize a moving window of it whenever the world changes,
while a simulator executes the result and serves it over HTTP/WebSocket.
"""

from .balance import (
    Contact,
    Stance,
    WrenchSet,
    is_balanced,
    solve_contact_wrenches,
    stance_feasible,
    support_interval,
)
from .errors import (
    InvalidArgument,
    LocoplanError,
    NotFound,
    ScenarioError,
    SingularSystem,
)
from .fixtures import fixture_names, load_fixture
from .graph import (
    EDGE_KINDS,
    BlockMatrix,
    GraphWeights,
    HyperEdge,
    TrajectoryGraph,
    build_graph,
)
from .pipeline import PipelineResult, plan_scenario
from .refiner import (
    HorizonState,
    OnlineRefiner,
    RefinerParams,
    TickReport,
    update_horizon,
    validate_refinement,
)
from .robot import (
    RobotModel,
    forward_kinematics,
    frame_jacobian,
    joint_limit_violation,
    load_robot_file,
    robot_from_dict,
    save_robot_file,
)
from .scenario import (
    PLAN_FORMAT,
    SCENARIO_FORMAT,
    TRAJ_FORMAT,
    PlanFile,
    Scenario,
    Task,
    WorldEvent,
    load_plan_file,
    load_scenario,
    save_plan_file,
    scenario_from_dict,
)
from .sim import SimParams, SimService, load_runlog, min_clearance, replay, strip_wall_times
from .solver import SolveReport, SolverParams, lm_step, optimize
from .stance_planner import (
    PlanResult,
    PlanStats,
    StancePlannerParams,
    StanceTree,
    StanceVertex,
    expand_step,
    extract_solution,
    generate_transition,
    plan_stances,
)
from .validate import validate_motions, validate_solution, validate_stance_sequence
from .wholebody import (
    GlobalPlan,
    Motion,
    WholeBodyParams,
    contact_jacobian,
    contact_residual,
    discretize_trajectory,
    plan_motion,
    project_to_manifold,
    time_parameterize,
)
from .world import (
    Box,
    ContactSurface,
    Disc,
    Obstacle,
    WorldState,
    ingest_point_cloud,
    sample_contact_point,
    signed_distance,
    signed_distance_gradient,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
