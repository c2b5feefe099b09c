"""Simulation and control of a single-motor gripper that grasps and twists."""

__version__ = "0.1.0"
