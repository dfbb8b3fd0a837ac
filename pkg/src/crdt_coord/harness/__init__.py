"""Experiment runner, property suites, statistics, reports and trace replay."""

from .experiment import CSV_COLUMNS, ExperimentConfig, RunRecord, RunResult, run_experiment, run_once
from .fuzz import TrialResult, sec_fuzz, sec_trial
from .replay import ReplayError, ReplayOutcome, replay
from .report import build_summary, read_csv, write_csv, write_report
from .stats import (
    Flagged,
    SummaryStats,
    WilcoxonResult,
    cohens_dz,
    iqr_filter,
    normalized_time,
    summarize,
    wilcoxon_signed_rank,
)

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "Flagged",
    "ReplayError",
    "ReplayOutcome",
    "RunRecord",
    "RunResult",
    "SummaryStats",
    "TrialResult",
    "WilcoxonResult",
    "build_summary",
    "cohens_dz",
    "iqr_filter",
    "normalized_time",
    "read_csv",
    "replay",
    "run_experiment",
    "run_once",
    "sec_fuzz",
    "sec_trial",
    "summarize",
    "wilcoxon_signed_rank",
    "write_csv",
    "write_report",
]
