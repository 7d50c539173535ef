"""Exchangeable processes on free-product, CAR, q-deformed, Boolean and free-group algebras."""

from .errors import DegenerateRegimeError, InternalConsistencyError, RejectedInputError, ResourceLimitError
from .exchange import Permutation

__all__ = [
    "DegenerateRegimeError",
    "InternalConsistencyError",
    "Permutation",
    "RejectedInputError",
    "ResourceLimitError",
]
__version__ = "0.1.0"
