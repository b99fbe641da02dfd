"""Test configuration for pytest."""
