"""Reduced over-collocation models for parametrized nonlinear PDEs.

Thin wrapper over the C++ core; see the README for the command-line tool.
"""

import json as _json
import os as _os

from ._core import (
    DomainError,
    FormatError,
    InvalidArgument,
    Problem,
    ReducedModel,
    __version__,
    list_problems,
    make_problem,
    parse_mesh,
    problem_ids,
    read_matrix,
    solve_truth,
    train,
    write_matrix,
)
from . import _core


def _config_text(config):
    if isinstance(config, dict):
        return _json.dumps(config)
    if isinstance(config, (str, _os.PathLike)) and _os.path.exists(config):
        with open(config) as f:
            return f.read()
    return config


def offline(config, out):
    """Train on a config (dict, JSON text or file path); returns (model, history)."""
    return _core.offline(_config_text(config), str(out))


def compare(config, out):
    """Error curves of every basis kind, as a list of dicts."""
    return _core.compare(_config_text(config), str(out))


def bench(config, out):
    return _core.bench(_config_text(config), str(out))


__all__ = [
    "DomainError",
    "FormatError",
    "InvalidArgument",
    "Problem",
    "ReducedModel",
    "bench",
    "compare",
    "list_problems",
    "make_problem",
    "offline",
    "parse_mesh",
    "problem_ids",
    "read_matrix",
    "solve_truth",
    "train",
    "write_matrix",
]
