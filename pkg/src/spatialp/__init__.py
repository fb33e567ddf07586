"""Spatial P systems: simulation engine, model language and bone-remodelling workload."""

__version__ = "0.1.0"
