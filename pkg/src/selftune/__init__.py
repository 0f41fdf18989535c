"""Self-tuning excitation control: RLS-identified ARMAX plant with J1/J2 laws."""
from .controllers import (
    ControllerConfig,
    ControllerState,
    DegenerateGainError,
    Variant,
    compute_kc,
    compute_kf,
    general_control,
    j1_control,
    j2_control,
)
from .estimator import EstimatorState, build_regressor, reset_covariance, rls_update
from .harness import (
    StepRecord,
    compare,
    compute_metrics,
    export_csv,
    read_csv,
    run_scenario,
)
from .plant import PlantModel, PlantState, SimulationFault, make_default_plant, plant_step
from .scenario import ScenarioConfig, config_from_dict, load_config, replica_config
from .sigcore import ConfigError, DelayPolynomial, SignalHistory, eval_at_one, is_stable

__version__ = "0.1.0"
