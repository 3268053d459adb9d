"""Motion retargeting from a motion-capture source to a pose-only target."""

__version__ = "0.1.0"
