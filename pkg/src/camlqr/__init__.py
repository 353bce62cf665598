"""Learning-based LQR for unknown continuous-time linear plants, with a
two-phase adversary model (eavesdropping, then covert input injection), a
camouflaged-exploration retrofit that keeps the learner sound while starving
the eavesdropper, a residual-threshold detector, and a model-based reference
solver for validation.
"""

from .adversary import (
    AttackPlan,
    AttackerState,
    IdentifiedModel,
    ZetaSignal,
    covert_attack_step,
    eavesdrop_identify,
    exact_model,
    worst_case_model,
)
from .data import (
    DataMatrices,
    RankReport,
    build_data_matrices,
    check_rank,
    excitation_stack,
    required_rank,
)
from .detector import (
    DetectorConfig,
    alarm_details,
    calibrate,
    detect,
    residual_series,
)
from .errors import (
    CamlqrError,
    ConfigError,
    DegenerateCalibration,
    Divergence,
    EigFailure,
    EmptyWindow,
    IllConditioned,
    InsufficientData,
    IoFailure,
    LogBranch,
    MissingPsi,
    NoConvergence,
    NonPositiveP,
    NotHurwitz,
    NotStabilizing,
    RankDeficient,
    SingularSystem,
    WindowOutOfRange,
)
from .learner import (
    GainResult,
    arrl,
    nominal_rl,
    run_iteration_report,
    write_gain_report,
)
from .linalg import (
    CostSpec,
    KleinmanTrace,
    care_residual,
    kleinman_solve,
    solve_lyapunov,
    spectral_abscissa,
    stabilizing_gain,
    vec,
    unvec,
)
from .plant import (
    CamouflageMap,
    ExplorationSignal,
    LTIModel,
    TrajectoryLog,
    benchmark_camouflage,
    compute_cost,
    iss_bound,
    make_sum_of_sinusoids,
    multi_agent_benchmark,
    simulate,
)
from .scenario import (
    BUILTIN_SCENARIOS,
    ScenarioConfig,
    ScenarioReport,
    builtin_config,
    oracle_gain,
    parse_config,
    run_scenario,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "AttackPlan",
    "AttackerState",
    "BUILTIN_SCENARIOS",
    "CamlqrError",
    "CamouflageMap",
    "ConfigError",
    "CostSpec",
    "DataMatrices",
    "DegenerateCalibration",
    "DetectorConfig",
    "Divergence",
    "EigFailure",
    "EmptyWindow",
    "ExplorationSignal",
    "GainResult",
    "IdentifiedModel",
    "IllConditioned",
    "InsufficientData",
    "IoFailure",
    "KleinmanTrace",
    "LTIModel",
    "LogBranch",
    "MissingPsi",
    "NoConvergence",
    "NonPositiveP",
    "NotHurwitz",
    "NotStabilizing",
    "RankDeficient",
    "RankReport",
    "ScenarioConfig",
    "ScenarioReport",
    "SingularSystem",
    "TrajectoryLog",
    "WindowOutOfRange",
    "ZetaSignal",
    "alarm_details",
    "arrl",
    "benchmark_camouflage",
    "build_data_matrices",
    "builtin_config",
    "calibrate",
    "care_residual",
    "check_rank",
    "compute_cost",
    "covert_attack_step",
    "detect",
    "eavesdrop_identify",
    "exact_model",
    "excitation_stack",
    "iss_bound",
    "kleinman_solve",
    "make_sum_of_sinusoids",
    "multi_agent_benchmark",
    "nominal_rl",
    "oracle_gain",
    "parse_config",
    "run_iteration_report",
    "required_rank",
    "residual_series",
    "run_scenario",
    "simulate",
    "solve_lyapunov",
    "spectral_abscissa",
    "stabilizing_gain",
    "unvec",
    "validate_config",
    "vec",
    "worst_case_model",
    "write_gain_report",
]
