"""Test suite package marker."""
"""Test package root."""
