"""Sensor sleep scheduling for object tracking."""

from ._sleeptrack import (
    NEVER_WAKE,
    ConfigError,
    ConvergenceError,
    Error,
    InconsistentObservation,
    InvalidArgument,
    IoError,
    ModelError,
    Network,
    belief_update,
    expected_lifetime,
    fcr_sleep_time,
    load_config,
    lower_bound,
    network,
    parse_config,
    qmdp_solve,
    sweep,
    tdelta_table,
)

__all__ = [
    "NEVER_WAKE",
    "ConfigError",
    "ConvergenceError",
    "Error",
    "InconsistentObservation",
    "InvalidArgument",
    "IoError",
    "ModelError",
    "Network",
    "belief_update",
    "expected_lifetime",
    "fcr_sleep_time",
    "load_config",
    "lower_bound",
    "network",
    "parse_config",
    "qmdp_solve",
    "sweep",
    "tdelta_table",
]
