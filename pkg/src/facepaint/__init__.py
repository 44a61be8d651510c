"""Map-conditioned GAN inpainting for face image sequences."""

__version__ = "0.1.0"

from .errors import DataError, FacepaintError, NumericsError

__all__ = ["DataError", "FacepaintError", "NumericsError", "__version__"]
