"""Spherical quadratic optimization with an external field: exact solver and large-deviation rates."""
