# Copyright (c) 2026 The localsgd-lab Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the local SGD simulator."""

from ._core import (
    AGGREGATE_HEADER,
    METRICS_HEADER,
    SUMMARY_HEADER,
    ConfigError,
    NumericError,
    allreduce_time,
    iteration_breakdown,
    linear_scaling_lr,
    lr_at,
    perf_table,
    read_aggregate,
    spearman,
    sweep,
    sweep_run_count,
    switch_point_correlation,
    train,
    trends,
)

__all__ = [
    "AGGREGATE_HEADER",
    "METRICS_HEADER",
    "SUMMARY_HEADER",
    "ConfigError",
    "NumericError",
    "allreduce_time",
    "iteration_breakdown",
    "linear_scaling_lr",
    "lr_at",
    "perf_table",
    "read_aggregate",
    "spearman",
    "sweep",
    "sweep_run_count",
    "switch_point_correlation",
    "train",
    "trends",
]
