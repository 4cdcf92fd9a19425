"""Claim verification pipeline: evidence retrieval, conflicting rationales, judge head."""

__version__ = "0.1.0"

from .claim import Claim, Stance

__all__ = ["Claim", "Stance", "__version__"]
