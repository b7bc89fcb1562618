"""MultiPA: multi-task pronunciation assessment for closed and open responses."""

__version__ = "0.1.0"
