"""
Domain Layer - Data Types and Invariants
Records, datasets, models and configurations of the identity cleaning process.
"""
