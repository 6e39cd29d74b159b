"""Multi-process antithetic coupling for Markov chain Monte Carlo."""
from ._kernels import BACKEND
from .streams import RandomStream, sample_permutation

__version__ = "0.1.0"

__all__ = ["BACKEND", "RandomStream", "sample_permutation", "__version__"]
