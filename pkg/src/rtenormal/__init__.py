"""Partial-data radiative transfer: forward map, normal operator, visibility."""
