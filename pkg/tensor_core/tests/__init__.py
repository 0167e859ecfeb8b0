"""
Tests for the tensor core package.
"""
