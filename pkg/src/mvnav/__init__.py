"""Interactive multiview navigation lab: synthetic scenes, block-based view
synthesis with residual side-frames, navigation modeling, rate allocation,
and a request/response streaming session."""

__version__ = "0.1.0"

from .errors import MvnavError

__all__ = ["MvnavError", "__version__"]
