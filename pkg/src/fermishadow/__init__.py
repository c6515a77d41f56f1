"""Fermionic classical shadows, cumulant RDM reconstruction, and quantum
subspace expansion at desk scale."""

from .backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
