"""
Unit Tests
Tests for individual components and domain models.
"""