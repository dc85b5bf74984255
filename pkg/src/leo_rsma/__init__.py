"""Statistical-CSI RSMA precoding for cooperative LEO satellite downlinks."""

__version__ = "0.1.0"
