"""Fuzzy H-infinity filter synthesis for T-S time-delay systems."""

import json

from ._tsfilt import (
    DomainError,
    Error,
    ExtractionError,
    Filter,
    Model,
    SimulationError,
    SolverError,
    ValidationError,
    evaluate_memberships,
    extract_filter,
    integral_inequality_suite,
    load_model,
    loads_model,
    membership_bounds,
    scenario_names,
    simulate,
    upsilon_relaxation_gap,
    upsilon_relaxation_suite,
)
from . import _tsfilt

__all__ = [
    "DomainError",
    "Error",
    "ExtractionError",
    "Filter",
    "Model",
    "SimulationError",
    "SolverError",
    "ValidationError",
    "evaluate_memberships",
    "extract_filter",
    "filter_from_report",
    "integral_inequality_suite",
    "load_model",
    "loads_model",
    "membership_bounds",
    "scenario_names",
    "simulate",
    "synthesize",
    "upsilon_relaxation_gap",
    "upsilon_relaxation_suite",
]


def synthesize(model, theorem=2, h=None, upsilon=None, rho=None, delay_term="derived", verify_grid=2001):
    """Minimum-gamma synthesis; returns the report as a dict (same layout as the CLI's JSON)."""
    text = _tsfilt._synthesize(model, theorem, h, upsilon, rho, delay_term, verify_grid)
    return json.loads(text)


def filter_from_report(report):
    """Filter stored in a report dict (or JSON text)."""
    text = report if isinstance(report, str) else json.dumps(report)
    return _tsfilt._filter_from_report(text)
