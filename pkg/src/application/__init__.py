"""
Application layer for identity dataset cleaning.

This layer contains the services that orchestrate domain objects and
infrastructure to implement filtering, training and evaluation.
"""

__version__ = "1.0.0"
