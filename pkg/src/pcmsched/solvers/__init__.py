"""Exact, multi-timescale and macro-action solvers plus the deadband baseline."""

from . import blocks, deadband, macro, vi

__all__ = ["blocks", "deadband", "macro", "vi"]
