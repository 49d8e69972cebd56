# flake8: noqa
from .experiments import (
    ExperimentManifest,
    RunInfo,
    analyze,
    build_simulation,
    calibrate,
    execute_run,
    run_baseline,
    run_sweep,
    run_train,
)
from .tables import ABSENT, Composition, write_tables
