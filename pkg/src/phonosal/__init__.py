"""Speaker-ID model training, saliency explanation, and phoneme-importance analysis."""

__version__ = "0.1.0"

from .errors import PhonosalError

__all__ = ["PhonosalError", "__version__"]
