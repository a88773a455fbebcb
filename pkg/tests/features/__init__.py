"""Feature tests package marker for relative imports."""
