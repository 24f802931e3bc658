"""
Presentation layer for the identity cleaner.

The command-line frontend over the application services.
"""

from .cli import cli

__all__ = ['cli']
