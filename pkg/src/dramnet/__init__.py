"""Timed Petri-net models of DRAM command protocols.

Models are written in a small template language (:mod:`dramnet.dsl`),
instantiated for a bank/rank configuration, simulated
(:mod:`dramnet.semantics`), enumerated into bounded trace sets
(:mod:`dramnet.traces`) and scored against a ground truth
(:mod:`dramnet.metrics`). :mod:`dramnet.mutate` runs seeded mutation
campaigns that test whether small configurations suffice to tell models
apart.
"""

from .core import (
    Arc,
    ArcKind,
    Coordinate,
    Marking,
    Net,
    NetError,
    Place,
    TimedArc,
    Transition,
    check_bank_symmetry,
    validate_structure,
)
from .dsl import ModelDefinition, ModelError, build_net, format_model, load_model, parse_model
from .metrics import (
    check_trace_equivalence,
    compare,
    extract_timing_constraints,
    jaccard,
    minimal_config_check,
    tc_recall,
)
from .mutate import generate_mutants, run_campaign
from .semantics import SimState, enabled_set, fire, initial_state, min_fire_time
from .traces import BudgetExceeded, enumerate_timed_traces, enumerate_traces, find_deadlocks

__all__ = [
    "Arc", "ArcKind", "BudgetExceeded", "Coordinate", "Marking", "ModelDefinition",
    "ModelError", "Net", "NetError", "Place", "SimState", "TimedArc", "Transition",
    "build_net", "check_bank_symmetry", "check_trace_equivalence", "compare",
    "enabled_set", "enumerate_timed_traces", "enumerate_traces", "extract_timing_constraints",
    "find_deadlocks", "fire", "format_model", "generate_mutants", "initial_state", "jaccard",
    "load_model", "min_fire_time", "minimal_config_check", "parse_model", "run_campaign",
    "tc_recall", "validate_structure",
]
