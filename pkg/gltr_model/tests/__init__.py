"""
Tests for the gltr model package.
"""
