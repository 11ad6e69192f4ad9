"""Throughput analysis, prediction and playback simulation."""

from ._core import (
    ArgumentError,
    ArmaModel,
    ArModel,
    HmmModel,
    InfeasibleTraceError,
    ParseError,
    SessionTrace,
    SimulationConfig,
    TputlabError,
    ValidationError,
    compute_stability,
    evaluate,
    filter_by_duration,
    fit_ar,
    fit_arma,
    fit_hmm,
    forward_filter,
    generate_synthetic,
    load_traces,
    model_from_json,
    model_to_json,
    offline_optimal,
    parse_traces,
    predict,
    reference_six_state_model,
    serialize_traces,
    simulate,
    split_sessions,
)

__all__ = [name for name in dir() if not name.startswith("_")]
