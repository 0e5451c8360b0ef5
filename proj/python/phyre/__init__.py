"""Python bindings for the phyre simulator, tasks and evaluation tools."""

import json as _json

from ._core import (
    Action,
    AttemptResult,
    Error,
    Task,
    Tier,
    __version__,
    auccess,
    default_task_dir,
    load_task,
    load_tier_tasks,
    rasterize_task,
    sample_actions,
    solves,
    success_curve,
    validate_action,
    weight_share,
    wilcoxon_one_sided,
)
from ._core import attempt as _attempt
from ._core import run_benchmark_json as _run_benchmark_json


def attempt(task, action, stride=15):
    """Simulate `action` on `task`; frames are returned as parsed scene dicts."""
    return _attempt(task, action, stride)


def run_benchmark(config=None, tasks=None):
    """Run one agent. `config` uses the same keys as the JSON config of the CLI."""
    out = _run_benchmark_json(_json.dumps(config or {}), tasks)
    return _json.loads(out)


__all__ = [
    "Action",
    "AttemptResult",
    "Error",
    "Task",
    "Tier",
    "attempt",
    "auccess",
    "default_task_dir",
    "load_task",
    "load_tier_tasks",
    "rasterize_task",
    "run_benchmark",
    "sample_actions",
    "solves",
    "success_curve",
    "validate_action",
    "weight_share",
    "wilcoxon_one_sided",
]
