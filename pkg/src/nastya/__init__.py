"""Deterministic simulator and verification suite for server-stepsize
federated optimization with random reshuffling."""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
