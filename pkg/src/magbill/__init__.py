"""Magnetic billiards on constant-curvature surfaces."""
