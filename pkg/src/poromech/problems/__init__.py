"""Experiment definitions, reference solutions, norms and studies."""

from . import cantilever, mandel, manufactured, studies
from .norms import ErrorNorms

__all__ = ["cantilever", "mandel", "manufactured", "studies", "ErrorNorms"]
