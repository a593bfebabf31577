"""Simulator and protocol stack for a thermal covert channel between adjacent PCs."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
