"""
Tests for the synth data package.
"""
