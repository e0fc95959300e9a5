"""DataCube: video corpus curation, profiling, and semantic retrieval."""

from .config import PlatformConfig
from .platform import Platform

__version__ = "0.1.0"

__all__ = ["Platform", "PlatformConfig", "__version__"]
