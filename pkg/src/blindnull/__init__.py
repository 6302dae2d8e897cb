"""Blind null-space learning for MIMO spectrum sharing from energy beacons."""

__version__ = "0.1.0"
