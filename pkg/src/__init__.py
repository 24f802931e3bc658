"""
Identity Cleaner
Cleans weakly labeled identity datasets with per-identity match graphs and
iterative embedding refinement.
"""

__version__ = "1.0.0"
__author__ = "Identity Cleaner Team"
