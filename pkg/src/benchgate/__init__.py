"""Evaluation, uncertainty and comparison tools for benchmarking binary classifiers."""

__version__ = "0.1.0"
