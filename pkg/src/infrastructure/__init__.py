"""
Infrastructure Layer
Technical implementations for logging, exceptions and file storage.
"""
