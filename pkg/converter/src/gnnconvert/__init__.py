"""Converters from public dataset distributions to the exitgnn container."""

from .cli import convert

__all__ = ["convert"]
__version__ = "0.1.0"
