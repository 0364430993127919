"""Bundled benchmark suite: generators, build step and runner."""
from .runner import SuiteMissing, load_suite, run_suite

__all__ = ["SuiteMissing", "load_suite", "run_suite"]
