"""Contrastive video-sequence pretraining and classification on numpy."""

__version__ = "0.1.0"
