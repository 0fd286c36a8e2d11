"""Unfitted mixed finite elements for Darcy flow with a stabilized Lagrange multiplier."""
