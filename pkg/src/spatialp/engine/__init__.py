"""Maximal-parallel evolution of Spatial P systems."""
from ._kernels import compiled_kernel, default_kernel, get_kernel, python_kernel
from .step import (
    Audit,
    EngineParams,
    SelectionFailure,
    StepSelection,
    Termination,
    Trace,
    advance,
    audit_step,
    enabled_instances,
    is_quiescent,
    run,
    step,
)
from .system import Configuration, ConfigurationError, Placement, RuleInstance, System

__all__ = [
    "Audit",
    "Configuration",
    "ConfigurationError",
    "EngineParams",
    "Placement",
    "RuleInstance",
    "SelectionFailure",
    "StepSelection",
    "System",
    "Termination",
    "Trace",
    "advance",
    "audit_step",
    "compiled_kernel",
    "default_kernel",
    "enabled_instances",
    "get_kernel",
    "is_quiescent",
    "python_kernel",
    "run",
    "step",
]
