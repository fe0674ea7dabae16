"""
Analyzers package
"""

from .td_learner import DiscountRule, LearnerState, predict, td_step, reset_traces
from .horde import (
    TargetSelector, PredictionSpec, PredictionBank,
    build_bank, bank_step, resolve_target, resolve_gamma,
    default_specs, default_probe_ids, select_probes,
    load_spec_file, write_spec_file, parse_spec_file, spec_hash,
    parse_label, target_series, gamma_series, trace_scaled_alpha
)
from .offline_oracle import (
    ReturnSeries, OfflineSolution, GramAccumulator,
    compute_returns, discounted_returns, forward_returns, return_horizon,
    solve_offline, solve_many, offline_rmse, design_matrix
)
from .evaluation import (
    LearningCurve, AlignedAverage,
    normalized_rmse, final_fraction_rmse, detect_events, align_events
)

__all__ = [
    'DiscountRule', 'LearnerState', 'predict', 'td_step', 'reset_traces',
    'TargetSelector', 'PredictionSpec', 'PredictionBank',
    'build_bank', 'bank_step', 'resolve_target', 'resolve_gamma',
    'default_specs', 'default_probe_ids', 'select_probes',
    'load_spec_file', 'write_spec_file', 'parse_spec_file', 'spec_hash',
    'parse_label', 'target_series', 'gamma_series', 'trace_scaled_alpha',
    'ReturnSeries', 'OfflineSolution', 'GramAccumulator',
    'compute_returns', 'discounted_returns', 'forward_returns', 'return_horizon',
    'solve_offline', 'solve_many', 'offline_rmse', 'design_matrix',
    'LearningCurve', 'AlignedAverage',
    'normalized_rmse', 'final_fraction_rmse', 'detect_events', 'align_events'
]
