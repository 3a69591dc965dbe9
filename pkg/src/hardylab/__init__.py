"""hardylab: fractional Hardy operators, extension fields and frequency analysis."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
