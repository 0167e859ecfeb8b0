"""
Tests for the shared package.
"""
