"""Physics-informed network training for resistance spot welding of aluminium sheets."""

__version__ = "0.1.0"
