"""dexsynth: optimization-based dexterous grasp synthesis and evaluation."""

__version__ = "0.1.0"
