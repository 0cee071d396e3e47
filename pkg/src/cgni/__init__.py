"""Forensic classifier separating computer-generated graphics from natural
images via sensor-noise residuals and a small CNN with majority-vote
aggregation over image patches."""

from ._backend import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
