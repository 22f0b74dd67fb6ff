"""Diagnosis engine for ensemble few-shot classifiers.

Recommends sparse subsets of base learners and shots via distance-based
subset selection, explains the resulting ensemble, and drives an interactive
tuning session over HTTP.
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
