"""Meta-learning shared hierarchies on a dual-configuration SCARA reaching task."""

__version__ = "0.1.0"
