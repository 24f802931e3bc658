"""
Test Suite for Manifest Alert System
Comprehensive test coverage for all components of the system.
"""